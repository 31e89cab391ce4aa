#include "qrng/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "qrng/io.hpp"
#include "qrng/noisemodel.hpp"

namespace qrng {

namespace {

using nlohmann::json;

// Dense at low power so the unweighted fit pins the F intercept; the upper
// points carry the quadratic AC term. High-power points have hundreds of
// times the absolute variance noise, so extending the sweep further would
// only leak noise into the intercept.
std::vector<double> default_fit_powers() {
    return {0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2,  0.3, 0.5, 0.75,
            1.0,  1.25, 1.5,  2.0,  2.5, 3.0,  3.5,  4.0, 4.5, 5.0};
}

bool has_stage(const PipelineConfig& cfg, const std::string& name) {
    return std::find(cfg.stages.begin(), cfg.stages.end(), name) != cfg.stages.end();
}

std::string hex_u64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json row_to_json(const TestRow& row) {
    return json{{"name", row.name},        {"ks_p", row.ks_p},
                {"proportion", row.proportion}, {"pass", row.pass},
                {"skipped", row.skipped},  {"outcomes", row.outcomes}};
}

}  // namespace

void PipelineConfig::normalize() {
    if (fit_powers_mw.empty()) fit_powers_mw = default_fit_powers();
    if (stages.empty()) throw std::invalid_argument("no stages enabled");
    (void)master();  // validates the hex string
    policy.validate();
    if (bins < 2) throw std::invalid_argument("bins must be >= 2");
}

std::vector<std::string> PipelineConfig::preset_names() {
    return {"paper-1gsps", "paper-2gsps", "paper-5gsps", "paper-10gsps"};
}

PipelineConfig PipelineConfig::preset(const std::string& name) {
    PipelineConfig cfg;
    cfg.preset_name = name;
    // fitted coefficients per sampling-rate column
    if (name == "paper-1gsps") {
        cfg.aq_mv2_per_mw = 6.0142;
        cfg.ac_mv2_per_mw2 = 0.4201;
        cfg.f_mv2 = 0.1714;
        cfg.sample_rate_gsps = 1.0;
    } else if (name == "paper-2gsps") {
        cfg.aq_mv2_per_mw = 5.8581;
        cfg.ac_mv2_per_mw2 = 0.4563;
        cfg.f_mv2 = 0.2052;
        cfg.sample_rate_gsps = 2.0;
    } else if (name == "paper-5gsps") {
        cfg.aq_mv2_per_mw = 6.0569;
        cfg.ac_mv2_per_mw2 = 0.4279;
        cfg.f_mv2 = 0.2200;
        cfg.sample_rate_gsps = 5.0;
    } else if (name == "paper-10gsps") {
        cfg.aq_mv2_per_mw = 6.2068;
        cfg.ac_mv2_per_mw2 = 0.3958;
        cfg.f_mv2 = 0.2162;
        cfg.sample_rate_gsps = 10.0;
        // headline operating point: directly measured ratio and range
        cfg.gamma_pin = 5.46;
        cfg.total_var_pin_mv2 = 5.24;
        cfg.range_pin_mv = 10.2;
    } else {
        throw std::invalid_argument("unknown preset: " + name);
    }
    cfg.headline_n = 33600000;
    cfg.headline_m = 28800000;
    cfg.normalize();
    return cfg;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
    PipelineConfig cfg;
    if (j.contains("preset")) cfg = preset(j.at("preset").get<std::string>());
    if (j.contains("master_seed")) cfg.master_seed_hex = j.at("master_seed").get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("stages")) cfg.stages = j.at("stages").get<std::vector<std::string>>();
    if (j.contains("table")) {
        const auto& t = j.at("table");
        cfg.aq_mv2_per_mw = t.value("aq", cfg.aq_mv2_per_mw);
        cfg.ac_mv2_per_mw2 = t.value("ac", cfg.ac_mv2_per_mw2);
        cfg.f_mv2 = t.value("f", cfg.f_mv2);
        cfg.sample_rate_gsps = t.value("rate_gsps", cfg.sample_rate_gsps);
        cfg.delay_ns = t.value("delay_ns", cfg.delay_ns);
        cfg.phase_var_rad2 = t.value("phase_var_rad2", cfg.phase_var_rad2);
    }
    if (j.contains("fit")) {
        const auto& t = j.at("fit");
        if (t.contains("powers")) cfg.fit_powers_mw = t.at("powers").get<std::vector<double>>();
        cfg.fit_samples_per_point = t.value("samples_per_point", cfg.fit_samples_per_point);
    }
    if (j.contains("acquire")) {
        const auto& t = j.at("acquire");
        cfg.acquire_power_mw = t.value("power_mw", cfg.acquire_power_mw);
        cfg.acquire_samples = t.value("samples", cfg.acquire_samples);
    }
    if (j.contains("entropy")) {
        const auto& t = j.at("entropy");
        if (t.contains("gamma")) cfg.gamma_pin = t.at("gamma").get<double>();
        if (t.contains("total_var_mv2")) cfg.total_var_pin_mv2 = t.at("total_var_mv2").get<double>();
        if (t.contains("range_mv")) cfg.range_pin_mv = t.at("range_mv").get<double>();
        cfg.bins = t.value("bins", cfg.bins);
        cfg.clip_fraction = t.value("clip_fraction", cfg.clip_fraction);
    }
    if (j.contains("extract")) {
        const auto& t = j.at("extract");
        cfg.policy.hmin_per_bit = t.value("hmin_per_bit", cfg.policy.hmin_per_bit);
        if (t.contains("epsilon")) cfg.policy.epsilon = t.at("epsilon").get<double>();
        cfg.policy.block_n = t.value("block_n", cfg.policy.block_n);
        cfg.hmin_from_entropy = t.value("hmin_from_entropy", cfg.hmin_from_entropy);
    }
    if (j.contains("headline_scale")) {
        const auto& t = j.at("headline_scale");
        if (t.contains("n")) cfg.headline_n = t.at("n").get<std::size_t>();
        if (t.contains("m")) cfg.headline_m = t.at("m").get<std::size_t>();
    }
    if (j.contains("test"))
        cfg.test_sequence_bits = j.at("test").value("sequence_bits", cfg.test_sequence_bits);
    cfg.normalize();
    return cfg;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    in >> j;
    return from_json(j);
}

json PipelineConfig::to_json() const {
    json j;
    if (!preset_name.empty()) j["preset"] = preset_name;
    j["master_seed"] = master_seed_hex;
    j["out_dir"] = out_dir;
    j["stages"] = stages;
    j["table"] = {{"aq", aq_mv2_per_mw},   {"ac", ac_mv2_per_mw2},
                  {"f", f_mv2},            {"rate_gsps", sample_rate_gsps},
                  {"delay_ns", delay_ns},  {"phase_var_rad2", phase_var_rad2}};
    j["fit"] = {{"powers", fit_powers_mw}, {"samples_per_point", fit_samples_per_point}};
    j["acquire"] = {{"power_mw", acquire_power_mw}, {"samples", acquire_samples}};
    json ent = {{"bins", bins}, {"clip_fraction", clip_fraction}};
    if (gamma_pin) ent["gamma"] = *gamma_pin;
    if (total_var_pin_mv2) ent["total_var_mv2"] = *total_var_pin_mv2;
    if (range_pin_mv) ent["range_mv"] = *range_pin_mv;
    j["entropy"] = ent;
    j["extract"] = {{"hmin_per_bit", policy.hmin_per_bit},
                    {"epsilon", policy.epsilon},
                    {"block_n", policy.block_n},
                    {"hmin_from_entropy", hmin_from_entropy}};
    if (headline_n && headline_m)
        j["headline_scale"] = {{"n", *headline_n}, {"m", *headline_m}};
    j["test"] = {{"sequence_bits", test_sequence_bits}};
    return j;
}

bool RunReport::rates_consistent() const {
    if (!data.contains("entropy")) return true;
    const auto& e = data.at("entropy");
    const double rate = e.at("sample_rate_gsps").get<double>();
    const double raw = e.at("hmin_per_sample").get<double>() * rate;
    if (std::fabs(raw - e.at("raw_rate_gbps").get<double>()) > 1e-12 * std::max(1.0, raw))
        return false;
    const double n = e.at("rate_n").get<double>();
    const double m = e.at("rate_m").get<double>();
    const double fin = 8.0 * (m / n) * rate;
    return std::fabs(fin - e.at("final_rate_gbps").get<double>()) <=
           1e-12 * std::max(1.0, fin);
}

RunReport run_pipeline(const PipelineConfig& cfg_in) {
    PipelineConfig cfg = cfg_in;
    cfg.normalize();
    const MasterSeed master = cfg.master();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const auto path = [&](const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); };

    RunReport report;
    report.data["schema_version"] = 1;
    report.data["config"] = cfg.to_json();
    // the report must not depend on where it is written
    report.data["config"].erase("out_dir");
    report.data["stages_run"] = json::array();

    using clock = std::chrono::steady_clock;
    const auto timed = [&](const std::string& stage, auto&& fn) {
        const auto t0 = clock::now();
        try {
            fn();
        } catch (const PipelineError&) {
            throw;
        } catch (const std::exception& ex) {
            throw PipelineError(stage, ex.what());
        }
        report.stage_seconds[stage] = std::chrono::duration<double>(clock::now() - t0).count();
        report.data["stages_run"].push_back(stage);
    };

    std::vector<VariancePoint> points;
    std::optional<NoiseModelParams> fit;
    std::optional<VoltageTrace> trace;
    std::optional<EntropyReport> entropy_rep;
    std::optional<EmpiricalEntropy> empirical;
    BitStream extracted;

    if (has_stage(cfg, "simulate")) {
        timed("simulate", [&] {
            for (std::size_t i = 0; i < cfg.fit_powers_mw.size(); ++i) {
                const double p = cfg.fit_powers_mw[i];
                SimConfig sim = SimConfig::from_fitted(cfg.aq_mv2_per_mw, cfg.ac_mv2_per_mw2,
                                                       cfg.f_mv2, p, cfg.sample_rate_gsps,
                                                       cfg.phase_var_rad2);
                sim.delay_ns = cfg.delay_ns;
                sim.classical_corr_time_ns = 10.0 * cfg.delay_ns;
                // The variance-vs-power curve is sampling-rate independent,
                // so the sweep decimates to ~3 classical correlation times
                // per sample: the variance estimator then runs on
                // effectively independent draws instead of paying the
                // overlapped-window correlation penalty.
                sim.sample_rate_gsps = 1.0 / (3.0 * sim.classical_corr_time_ns);
                sim.transfer_mode = Transfer::small_angle;
                sim.rng_seed = derive_seed(master, "fit-sweep-" + std::to_string(i));
                const auto tr = simulate_trace(sim, AdcConfig::auto_for(sim),
                                               cfg.fit_samples_per_point);
                long double mean = 0.0L, ss = 0.0L;
                for (std::size_t k = 0; k < tr.size(); ++k) mean += tr.voltage(k);
                mean /= static_cast<long double>(tr.size());
                for (std::size_t k = 0; k < tr.size(); ++k) {
                    const long double d = tr.voltage(k) - mean;
                    ss += d * d;
                }
                points.push_back(
                    {p, static_cast<double>(ss / static_cast<long double>(tr.size() - 1)),
                     tr.size()});
            }
            write_variance_table(points, path("variance_points.txt"));
            report.data["simulate"] = {{"points", points.size()},
                                       {"samples_per_point", cfg.fit_samples_per_point},
                                       {"file", "variance_points.txt"}};
        });
    }

    if (has_stage(cfg, "fit")) {
        timed("fit", [&] {
            if (points.empty()) points = read_variance_table(path("variance_points.txt"));
            fit = fit_variance_model(points);
            report.data["fit"] = {{"aq_mv2_per_mw", fit->aq},
                                  {"ac_mv2_per_mw2", fit->ac},
                                  {"f_mv2", fit->f},
                                  {"r_squared", fit->r_squared}};
        });
    }

    if (has_stage(cfg, "optimal-power")) {
        timed("optimal-power", [&] {
            const NoiseModelParams params =
                fit ? *fit
                    : NoiseModelParams{cfg.aq_mv2_per_mw, cfg.ac_mv2_per_mw2, cfg.f_mv2, 1.0};
            const auto opt = optimal_power(params);
            report.data["optimal_power"] = {{"p_star_mw", opt.p_star_mw},
                                            {"gamma_star", opt.gamma_star},
                                            {"from_fit", fit.has_value()}};
        });
    }

    if (has_stage(cfg, "acquire")) {
        timed("acquire", [&] {
            SimConfig sim = SimConfig::from_fitted(cfg.aq_mv2_per_mw, cfg.ac_mv2_per_mw2,
                                                   cfg.f_mv2, cfg.acquire_power_mw,
                                                   cfg.sample_rate_gsps, cfg.phase_var_rad2);
            sim.delay_ns = cfg.delay_ns;
            sim.classical_corr_time_ns = 10.0 * cfg.delay_ns;
            sim.rng_seed = derive_seed(master, "acquire");
            trace = simulate_trace(sim, AdcConfig::auto_for(sim), cfg.acquire_samples);
            write_trace(*trace, path("trace.bin"), path("trace.json"), &sim);
            report.data["acquire"] = {{"samples", trace->size()},
                                      {"power_mw", cfg.acquire_power_mw},
                                      {"clipped_fraction", trace->clipped_fraction},
                                      {"model_gamma", sim.predicted_gamma()},
                                      {"file", "trace.bin"}};
        });
    }

    if (has_stage(cfg, "entropy")) {
        timed("entropy", [&] {
            const bool pinned = cfg.gamma_pin && cfg.total_var_pin_mv2 && cfg.range_pin_mv;
            if (!trace && !pinned) {
                if (!fs::exists(path("trace.bin")))
                    throw std::runtime_error(
                        "entropy stage needs either pinned inputs or an acquired trace");
                trace = read_trace(path("trace.bin"), path("trace.json"));
            }
            double total_var, gamma, v1, v2;
            if (trace) {
                empirical = empirical_min_entropy(*trace, {cfg.clip_fraction, cfg.bins});
                long double mean = 0.0L, ss = 0.0L;
                for (std::size_t k = 0; k < trace->size(); ++k) mean += trace->voltage(k);
                mean /= static_cast<long double>(trace->size());
                for (std::size_t k = 0; k < trace->size(); ++k) {
                    const long double d = trace->voltage(k) - mean;
                    ss += d * d;
                }
                total_var = static_cast<double>(ss / static_cast<long double>(trace->size() - 1));
                // direct-measurement path: classical + detection variance is the
                // configured remainder at the operating power
                const double classical = cfg.ac_mv2_per_mw2 * cfg.acquire_power_mw *
                                             cfg.acquire_power_mw +
                                         cfg.f_mv2;
                gamma = gamma_from_measurement(total_var, std::min(classical, total_var));
                v1 = empirical->v1;
                v2 = empirical->v2;
            } else {
                total_var = 0.0;
                gamma = 0.0;
                v1 = v2 = 0.0;
            }
            if (cfg.total_var_pin_mv2) total_var = *cfg.total_var_pin_mv2;
            if (cfg.gamma_pin) gamma = *cfg.gamma_pin;
            if (cfg.range_pin_mv) {
                v1 = -*cfg.range_pin_mv / 2.0;
                v2 = *cfg.range_pin_mv / 2.0;
            }
            const std::size_t rate_n = cfg.headline_n.value_or(cfg.policy.block_n);
            std::size_t rate_m;
            if (cfg.headline_m) {
                rate_m = *cfg.headline_m;
            } else {
                ExtractionPolicy pol = cfg.policy;
                rate_m = output_length(rate_n, pol);
            }
            entropy_rep = model_entropy_report(gamma, total_var, v1, v2, cfg.bins,
                                               cfg.sample_rate_gsps, rate_n, rate_m);
            json e = {{"gamma", entropy_rep->gamma},
                      {"total_var_mv2", entropy_rep->total_var_mv2},
                      {"quantum_var_mv2", entropy_rep->quantum_var_mv2},
                      {"v1_mv", entropy_rep->v1_mv},
                      {"v2_mv", entropy_rep->v2_mv},
                      {"p_max", entropy_rep->p_max},
                      {"hmin_per_sample", entropy_rep->hmin_per_sample},
                      {"hmin_per_bit", entropy_rep->hmin_per_bit},
                      {"raw_rate_gbps", entropy_rep->raw_rate_gbps},
                      {"final_rate_gbps", entropy_rep->final_rate_gbps},
                      {"sample_rate_gsps", cfg.sample_rate_gsps},
                      {"rate_n", rate_n},
                      {"rate_m", rate_m}};
            if (empirical) {
                e["empirical"] = {{"v1_mv", empirical->v1},
                                  {"v2_mv", empirical->v2},
                                  {"p_max", empirical->p_max},
                                  {"hmin_per_sample", empirical->hmin_per_sample},
                                  {"hmin_per_bit", empirical->hmin_per_bit},
                                  {"degenerate", empirical->degenerate}};
            }
            report.data["entropy"] = e;
        });
    }

    if (has_stage(cfg, "extract")) {
        timed("extract", [&] {
            if (!trace) {
                if (!fs::exists(path("trace.bin")))
                    throw std::runtime_error("extract stage needs an acquired trace");
                trace = read_trace(path("trace.bin"), path("trace.json"));
            }
            ExtractionPolicy policy = cfg.policy;
            if (cfg.hmin_from_entropy && entropy_rep)
                policy.hmin_per_bit = entropy_rep->hmin_per_bit;
            const std::size_t n = policy.block_n;
            const std::size_t m = output_length(n, policy);
            const auto spec = make_spec(master, n, m);
            write_bits(spec.seed, path("toeplitz_seed.bits"));
            const BitStream raw_bits =
                BitStream::from_bytes({trace->codes.data(), trace->codes.size()});
            extracted = extract_stream(spec, raw_bits, TailPolicy::drop);
            write_bits(extracted, path("extracted.bits"));
            ExtractionMeta meta{n, m, raw_bits.size() / n, hex_u64(seed_fingerprint(master))};
            write_extraction_meta(meta, path("extracted.json"));
            report.data["extract"] = {{"n", n},
                                      {"m", m},
                                      {"hmin_per_bit", policy.hmin_per_bit},
                                      {"blocks", meta.block_count},
                                      {"input_bits", raw_bits.size()},
                                      {"output_bits", extracted.size()},
                                      {"ratio", static_cast<double>(m) / static_cast<double>(n)},
                                      {"seed_file", "toeplitz_seed.bits"},
                                      {"file", "extracted.bits"}};
        });
    }

    if (has_stage(cfg, "test")) {
        timed("test", [&] {
            if (extracted.empty()) {
                if (!fs::exists(path("extracted.bits")))
                    throw std::runtime_error("test stage needs extracted bits");
                extracted = read_bits(path("extracted.bits"));
            }
            const auto battery = run_battery(extracted, cfg.test_sequence_bits);
            json rows = json::array();
            for (const auto& row : battery.rows) rows.push_back(row_to_json(row));
            const auto ac = autocorrelation(extracted.slice(0, std::min<std::size_t>(
                                                                   extracted.size(), 10000000)),
                                            100);
            report.data["test"] = {{"sequences", battery.sequences},
                                   {"sequence_bits", battery.sequence_bits},
                                   {"alpha", battery.alpha},
                                   {"rows", rows},
                                   {"all_pass", battery.all_pass},
                                   {"failed_tests", battery.failed_tests},
                                   {"max_autocorr", ac.max_abs_beyond_lag0()},
                                   {"autocorr_null_sigma", ac.sigma_null}};
        });
    }

    std::ofstream out(path("report.json"), std::ios::trunc);
    out << report_to_string(report, false);
    return report;
}

std::string report_to_string(const RunReport& report, bool include_timings) {
    json j = report.data;
    if (include_timings) {
        json t;
        for (const auto& [stage, secs] : report.stage_seconds) t[stage] = secs;
        j["stage_seconds"] = t;
    }
    return j.dump(2) + "\n";
}

}  // namespace qrng

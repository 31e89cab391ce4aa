// qrng: phase-fluctuation QRNG toolkit command line.
//
// Subcommands cover the whole chain: simulate the analog front end, fit the
// variance model, locate the optimal power, evaluate min-entropy, run
// Toeplitz extraction, test the output, exercise the stabilizer loop, and
// run the full pipeline from a config or preset.

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include "qrng/entropy.hpp"
#include "qrng/extractor.hpp"
#include "qrng/io.hpp"
#include "qrng/noisemodel.hpp"
#include "qrng/physsim.hpp"
#include "qrng/pipeline.hpp"
#include "qrng/randstats.hpp"
#include "qrng/stabilizer.hpp"

using namespace qrng;
using nlohmann::json;

namespace {

void print_battery(const TestReport& rep) {
    std::printf("%-20s %10s %10s  %s\n", "test", "ks_p", "proportion", "result");
    for (const auto& row : rep.rows) {
        if (row.skipped) {
            std::printf("%-20s %10s %10s  skipped\n", row.name.c_str(), "-", "-");
            continue;
        }
        std::printf("%-20s %10.4f %10.3f  %s\n", row.name.c_str(), row.ks_p, row.proportion,
                    row.pass ? "pass" : "FAIL");
    }
    std::printf("sequences=%zu x %zu bits, alpha=%.2g: %s\n", rep.sequences, rep.sequence_bits,
                rep.alpha, rep.all_pass ? "all tests pass" : "some tests FAIL");
}

BitStream load_bit_input(const std::string& bits_path, const std::string& raw_path) {
    if (!bits_path.empty()) return read_bits(bits_path);
    const auto trace_bytes = [&] {
        std::FILE* f = std::fopen(raw_path.c_str(), "rb");
        if (!f) throw std::runtime_error("cannot open: " + raw_path);
        std::vector<std::uint8_t> bytes;
        std::uint8_t buf[65536];
        std::size_t got;
        while ((got = std::fread(buf, 1, sizeof buf, f)) > 0)
            bytes.insert(bytes.end(), buf, buf + got);
        std::fclose(f);
        return bytes;
    }();
    return BitStream::from_bytes(trace_bytes);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"phase-fluctuation QRNG toolkit"};
    app.require_subcommand(1);

    // ---- simulate ----------------------------------------------------------
    auto* sim_cmd = app.add_subcommand("simulate", "simulate a raw ADC trace");
    double sim_aq = 6.2068, sim_ac = 0.3958, sim_f = 0.2162, sim_power = 0.9, sim_rate = 10.0;
    double sim_delay = 3.735, sim_phase_var = 0.004;
    std::uint64_t sim_seed = 1;
    std::size_t sim_samples = 1000000;
    bool sim_small_angle = false;
    std::string sim_out = "trace.bin", sim_meta = "trace.json";
    sim_cmd->add_option("--aq", sim_aq, "AQ coefficient (mV^2/mW)");
    sim_cmd->add_option("--ac", sim_ac, "AC coefficient (mV^2/mW^2)");
    sim_cmd->add_option("--f", sim_f, "detection noise F (mV^2)");
    sim_cmd->add_option("--power", sim_power, "laser power (mW)");
    sim_cmd->add_option("--rate", sim_rate, "sampling rate (GSa/s)");
    sim_cmd->add_option("--delay", sim_delay, "arm delay (ns)");
    sim_cmd->add_option("--phase-var", sim_phase_var, "total phase variance at this power (rad^2)");
    sim_cmd->add_option("--samples", sim_samples, "number of samples");
    sim_cmd->add_option("--seed", sim_seed, "64-bit RNG seed");
    sim_cmd->add_flag("--small-angle", sim_small_angle, "linearized transfer instead of full sine");
    sim_cmd->add_option("--out", sim_out, "raw code output file");
    sim_cmd->add_option("--meta", sim_meta, "JSON sidecar path");

    // ---- fit ---------------------------------------------------------------
    auto* fit_cmd = app.add_subcommand("fit", "fit the variance-vs-power model");
    std::string fit_input;
    fit_cmd->add_option("--input", fit_input, "variance point table (text)")->required();

    // ---- optimal-power -----------------------------------------------------
    auto* opt_cmd = app.add_subcommand("optimal-power", "optimal power for the quantum ratio");
    double opt_aq = 6.2068, opt_ac = 0.3958, opt_f = 0.2162;
    std::string opt_input;
    opt_cmd->add_option("--aq", opt_aq, "AQ coefficient");
    opt_cmd->add_option("--ac", opt_ac, "AC coefficient");
    opt_cmd->add_option("--f", opt_f, "F coefficient");
    opt_cmd->add_option("--input", opt_input, "fit a variance table instead of using --aq/--ac/--f");

    // ---- entropy -----------------------------------------------------------
    auto* ent_cmd = app.add_subcommand("entropy", "min-entropy evaluation");
    std::string ent_input, ent_meta;
    std::optional<double> ent_gamma, ent_total, ent_range;
    int ent_bins = 256;
    double ent_clip = 0.001, ent_rate = 10.0;
    std::size_t ent_n = 33600000;
    std::optional<std::size_t> ent_m;  // default: the leftover-hash budget
    ent_cmd->add_option("--input", ent_input, "raw trace file (empirical path)");
    ent_cmd->add_option("--meta", ent_meta, "trace sidecar JSON");
    ent_cmd->add_option("--gamma", ent_gamma, "quantum signal ratio (direct measurement)");
    ent_cmd->add_option("--total-var", ent_total, "total voltage variance (mV^2)");
    ent_cmd->add_option("--range", ent_range, "effective voltage range V2-V1 (mV)");
    ent_cmd->add_option("--bins", ent_bins, "histogram bins");
    ent_cmd->add_option("--clip", ent_clip, "clip fraction per side");
    ent_cmd->add_option("--rate", ent_rate, "sampling rate (GSa/s)");
    ent_cmd->add_option("--n", ent_n, "extractor input bits (rate accounting)");
    ent_cmd->add_option("--m", ent_m, "extractor output bits (rate accounting)");
    std::string ent_hist_out;
    ent_cmd->add_option("--hist-out", ent_hist_out, "dump the clipped histogram (bin_center count)");

    // ---- extract -----------------------------------------------------------
    auto* ext_cmd = app.add_subcommand("extract", "Toeplitz-hashing randomness extraction");
    std::string ext_input, ext_bits_in, ext_out = "extracted.bits", ext_seed_file,
                ext_master = "8f5c2a7e913d64b0cc41e8a65279f3de0b87c1243a9655e7d8fa30b612c94d71";
    std::string ext_ascii_out, ext_raw_out;
    std::size_t ext_n = std::size_t{1} << 20;
    std::optional<std::size_t> ext_m;
    double ext_hmin = 0.88, ext_epsilon = 0x1p-100;
    bool ext_reject_tail = false;
    ext_cmd->add_option("--input", ext_input, "raw byte input (e.g. trace.bin)");
    ext_cmd->add_option("--bits", ext_bits_in, "packed-bit input file");
    ext_cmd->add_option("--n", ext_n, "block input size in bits");
    ext_cmd->add_option("--m", ext_m, "output bits per block (default: entropy budget)");
    ext_cmd->add_option("--hmin", ext_hmin, "assessed entropy rate (bits/bit)");
    ext_cmd->add_option("--epsilon", ext_epsilon, "leftover-hash security parameter");
    ext_cmd->add_option("--block-size", ext_n, "alias of --n");
    ext_cmd->add_option("--seed-file", ext_seed_file, "Toeplitz seed file (packed bits)");
    ext_cmd->add_option("--master-seed", ext_master, "256-bit master seed (64 hex digits)");
    ext_cmd->add_flag("--reject-tail", ext_reject_tail, "error on a truncated final block");
    ext_cmd->add_option("--out", ext_out, "extracted output (packed bits + header)");
    ext_cmd->add_option("--ascii-out", ext_ascii_out, "also export ASCII 0/1");
    ext_cmd->add_option("--raw-out", ext_raw_out, "also export bare packed bytes");

    // ---- autocorr ----------------------------------------------------------
    auto* ac_cmd = app.add_subcommand("autocorr", "normalized autocorrelation");
    std::string ac_input, ac_meta, ac_bits, ac_out;
    int ac_maxlag = 100;
    std::string ac_method = "auto";
    ac_cmd->add_option("--input", ac_input, "raw trace file (with --meta)");
    ac_cmd->add_option("--meta", ac_meta, "trace sidecar JSON");
    ac_cmd->add_option("--bits", ac_bits, "packed-bit input file");
    ac_cmd->add_option("--max-lag", ac_maxlag, "maximum lag");
    ac_cmd->add_option("--method", ac_method, "auto|direct|fft");
    ac_cmd->add_option("--out", ac_out, "write lag/coefficient pairs to file");

    // ---- test --------------------------------------------------------------
    auto* test_cmd = app.add_subcommand("test", "statistical test battery");
    std::string test_bits, test_input;
    std::size_t test_seq_bits = 1000000;
    test_cmd->add_option("--bits", test_bits, "packed-bit input file");
    test_cmd->add_option("--input", test_input, "raw byte input (bits taken LSB-first)");
    test_cmd->add_option("--seq-bits", test_seq_bits, "bits per tested sequence");

    // ---- stabilize ---------------------------------------------------------
    auto* stab_cmd = app.add_subcommand("stabilize", "closed-loop interferometer stabilization");
    PlantConfig plant;
    PidGains gains;
    double stab_duration = 1200.0;
    bool stab_open_loop = false;
    std::string stab_out;
    stab_cmd->add_option("--duration", stab_duration, "simulated seconds");
    stab_cmd->add_option("--drift-rate", plant.drift_rate_rad_per_s, "rad/s");
    stab_cmd->add_option("--drift-noise", plant.drift_noise_rad2_per_s, "rad^2/s");
    stab_cmd->add_option("--visibility", plant.fringe_visibility, "fringe visibility");
    stab_cmd->add_option("--power", plant.input_power_mw, "input power (mW)");
    stab_cmd->add_option("--meter-noise", plant.meter_noise_rel, "relative meter read noise");
    stab_cmd->add_option("--meter-rate", plant.meter_rate_hz, "control rate (Hz)");
    stab_cmd->add_option("--actuator-range", plant.actuator_range_rad, "rad");
    stab_cmd->add_option("--actuator-slew", plant.actuator_slew_rad_per_s, "rad/s");
    stab_cmd->add_option("--initial-phase", plant.initial_phase_rad, "rad");
    stab_cmd->add_option("--seed", plant.rng_seed, "RNG seed");
    stab_cmd->add_option("--kp", gains.kp, "proportional gain");
    stab_cmd->add_option("--ki", gains.ki, "integral gain (1/s)");
    stab_cmd->add_option("--kd", gains.kd, "derivative gain (s)");
    stab_cmd->add_option("--integral-clamp", gains.integral_clamp, "anti-windup bound");
    stab_cmd->add_option("--setpoint", gains.setpoint, "OUT1 power fraction");
    stab_cmd->add_flag("--open-loop", stab_open_loop, "disconnect the controller");
    stab_cmd->add_option("--out", stab_out, "write t/out1/phi/control trace (TSV)");

    // ---- bench -------------------------------------------------------------
    auto* bench_cmd = app.add_subcommand("bench", "extraction throughput benchmark");
    std::size_t bench_n = std::size_t{1} << 20;
    double bench_hmin = 0.88, bench_seconds = 3.0;
    bool bench_naive = false;
    std::string bench_master =
        "8f5c2a7e913d64b0cc41e8a65279f3de0b87c1243a9655e7d8fa30b612c94d71";
    bench_cmd->add_option("--block-n", bench_n, "block input size in bits");
    bench_cmd->add_option("--hmin", bench_hmin, "entropy rate defining m");
    bench_cmd->add_option("--seconds", bench_seconds, "measurement window");
    bench_cmd->add_flag("--naive", bench_naive, "measure the naive double-loop path");
    bench_cmd->add_option("--master-seed", bench_master, "seed source");

    // ---- run ---------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "full pipeline");
    std::string run_config, run_preset, run_out_dir, run_master;
    std::vector<std::string> run_stages;
    run_cmd->add_option("--config", run_config, "pipeline config JSON");
    run_cmd->add_option("--preset", run_preset, "paper-1gsps|paper-2gsps|paper-5gsps|paper-10gsps");
    run_cmd->add_option("--out-dir", run_out_dir, "artifact directory");
    run_cmd->add_option("--master-seed", run_master, "256-bit master seed (64 hex digits)");
    run_cmd->add_option("--stages", run_stages, "override the stage list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // usage error
    }

    try {
        if (*sim_cmd) {
            SimConfig cfg = SimConfig::from_fitted(sim_aq, sim_ac, sim_f, sim_power, sim_rate,
                                                   sim_phase_var);
            cfg.delay_ns = sim_delay;
            cfg.classical_corr_time_ns = 10.0 * sim_delay;
            cfg.rng_seed = sim_seed;
            cfg.transfer_mode = sim_small_angle ? Transfer::small_angle : Transfer::full_sine;
            const auto trace = simulate_trace(cfg, AdcConfig::auto_for(cfg), sim_samples);
            write_trace(trace, sim_out, sim_meta, &cfg);
            if (trace.saturated())
                std::fprintf(stderr, "warning: %.2f%% of codes clamped at the rails\n",
                             100.0 * trace.clipped_fraction);
            std::printf("wrote %zu samples to %s (meta %s)\n", trace.size(), sim_out.c_str(),
                        sim_meta.c_str());
        } else if (*fit_cmd) {
            const auto params = fit_variance_model(read_variance_table(fit_input));
            std::printf("AQ = %.6g mV^2/mW\nAC = %.6g mV^2/mW^2\nF  = %.6g mV^2\nR^2 = %.6f\n",
                        params.aq, params.ac, params.f, params.r_squared);
        } else if (*opt_cmd) {
            NoiseModelParams params{opt_aq, opt_ac, opt_f, 1.0};
            if (!opt_input.empty()) params = fit_variance_model(read_variance_table(opt_input));
            const auto opt = optimal_power(params);
            std::printf("P* = %.6g mW\ngamma* = %.6g\n", opt.p_star_mw, opt.gamma_star);
        } else if (*ent_cmd) {
            double total = ent_total.value_or(0.0), v1 = 0.0, v2 = 0.0;
            double gamma = ent_gamma.value_or(0.0);
            if (!ent_input.empty()) {
                const auto trace = read_trace(ent_input, ent_meta.empty() ? ent_input + ".json"
                                                                          : ent_meta);
                const auto emp = empirical_min_entropy(trace, {ent_clip, ent_bins});
                std::printf("empirical: range [%.4g, %.4g] mV, p_max = %.4g, "
                            "hmin = %.4f bits/sample (%.4f bits/bit)%s\n",
                            emp.v1, emp.v2, emp.p_max, emp.hmin_per_sample, emp.hmin_per_bit,
                            emp.degenerate ? " [degenerate range]" : "");
                if (!ent_hist_out.empty()) {
                    std::ofstream hf(ent_hist_out, std::ios::trunc);
                    hf << "# bin_center_mv count (range [" << emp.v1 << ", " << emp.v2 << "])\n";
                    const double w = (emp.v2 - emp.v1) / static_cast<double>(emp.histogram.size());
                    for (std::size_t b = 0; b < emp.histogram.size(); ++b)
                        hf << emp.v1 + (static_cast<double>(b) + 0.5) * w << ' '
                           << emp.histogram[b] << '\n';
                }
                if (!ent_total) {
                    long double mean = 0.0L, ss = 0.0L;
                    for (std::size_t k = 0; k < trace.size(); ++k) mean += trace.voltage(k);
                    mean /= static_cast<long double>(trace.size());
                    for (std::size_t k = 0; k < trace.size(); ++k) {
                        const long double d = trace.voltage(k) - mean;
                        ss += d * d;
                    }
                    total = static_cast<double>(ss / static_cast<long double>(trace.size() - 1));
                }
                v1 = emp.v1;
                v2 = emp.v2;
            }
            if (ent_range) {
                v1 = -*ent_range / 2.0;
                v2 = *ent_range / 2.0;
            }
            if (!ent_gamma && ent_input.empty())
                throw std::runtime_error("model path needs --gamma (or --input for empirical)");
            if (gamma > 0.0 && v2 > v1) {
                const double hmin_bit =
                    gaussian_min_entropy(quantum_variance(total, gamma), v1, v2, ent_bins) / 8.0;
                const std::size_t m =
                    ent_m ? *ent_m : output_length(ent_n, {hmin_bit, 0x1p-100, ent_n});
                const auto rep =
                    model_entropy_report(gamma, total, v1, v2, ent_bins, ent_rate, ent_n, m);
                std::printf("gamma = %.4f\ntotal variance = %.4f mV^2\n"
                            "quantum variance = %.4f mV^2\np_max = %.6g\n"
                            "hmin = %.4f bits/sample (%.4f bits/bit)\n"
                            "raw rate = %.4g Gbps\nfinal rate = %.4g Gbps (n=%zu, m=%zu)\n",
                            rep.gamma, rep.total_var_mv2, rep.quantum_var_mv2, rep.p_max,
                            rep.hmin_per_sample, rep.hmin_per_bit, rep.raw_rate_gbps,
                            rep.final_rate_gbps, ent_n, m);
            }
        } else if (*ext_cmd) {
            if (ext_input.empty() && ext_bits_in.empty())
                throw std::runtime_error("extract needs --input or --bits");
            const BitStream input = load_bit_input(ext_bits_in, ext_input);
            ExtractionPolicy policy{ext_hmin, ext_epsilon, ext_n};
            const std::size_t m = ext_m ? *ext_m : output_length(ext_n, policy);
            if (static_cast<double>(m) >
                static_cast<double>(ext_n) * ext_hmin - 2.0 * std::log2(1.0 / ext_epsilon))
                throw std::runtime_error("requested m exceeds the leftover-hash budget");
            ToeplitzSpec spec;
            if (!ext_seed_file.empty()) {
                spec = ToeplitzSpec{ext_n, m, read_bits(ext_seed_file)};
                spec.validate();
            } else {
                spec = make_spec(parse_master_seed(ext_master), ext_n, m);
            }
            const auto out = extract_stream(spec, input,
                                            ext_reject_tail ? TailPolicy::reject
                                                            : TailPolicy::drop);
            write_bits(out, ext_out);
            ExtractionMeta meta{ext_n, m, input.size() / ext_n,
                                ext_seed_file.empty()
                                    ? [&] {
                                          char b[17];
                                          std::snprintf(b, sizeof b, "%016" PRIx64,
                                                        seed_fingerprint(
                                                            parse_master_seed(ext_master)));
                                          return std::string(b);
                                      }()
                                    : std::string("external-seed")};
            write_extraction_meta(meta, ext_out + ".json");
            if (!ext_ascii_out.empty()) write_bits_ascii(out, ext_ascii_out);
            if (!ext_raw_out.empty()) write_bits_raw(out, ext_raw_out);
            std::printf("extracted %zu bits from %zu (n=%zu, m=%zu, %zu blocks) -> %s\n",
                        out.size(), input.size(), ext_n, m, meta.block_count, ext_out.c_str());
        } else if (*ac_cmd) {
            AutocorrMethod method = AutocorrMethod::automatic;
            if (ac_method == "direct") method = AutocorrMethod::direct;
            else if (ac_method == "fft") method = AutocorrMethod::transform;
            else if (ac_method != "auto") throw std::runtime_error("unknown method " + ac_method);
            AutocorrResult res;
            if (!ac_bits.empty()) {
                res = autocorrelation(read_bits(ac_bits), ac_maxlag, method);
            } else if (!ac_input.empty()) {
                const auto trace = read_trace(ac_input, ac_meta.empty() ? ac_input + ".json"
                                                                        : ac_meta);
                res = autocorrelation(trace.voltages(), ac_maxlag, method);
            } else {
                throw std::runtime_error("autocorr needs --input or --bits");
            }
            std::string out_text;
            char line[64];
            for (std::size_t i = 0; i < res.coeffs.size(); ++i) {
                std::snprintf(line, sizeof line, "%d\t%.10g\n", res.lags[i], res.coeffs[i]);
                out_text += line;
            }
            if (!ac_out.empty()) {
                std::ofstream f(ac_out, std::ios::trunc);
                f << "# lag\tcoeff (n=" << res.n << ", 1/sqrt(n)=" << res.sigma_null << ")\n"
                  << out_text;
                std::printf("wrote %zu lags to %s\n", res.coeffs.size(), ac_out.c_str());
            } else {
                std::fputs(out_text.c_str(), stdout);
            }
            std::printf("max |rho(k)|, k>=1: %.6g (null sigma %.3g)\n",
                        res.max_abs_beyond_lag0(), res.sigma_null);
        } else if (*test_cmd) {
            if (test_bits.empty() && test_input.empty())
                throw std::runtime_error("test needs --bits or --input");
            const BitStream bits = load_bit_input(test_bits, test_input);
            const auto rep = run_battery(bits, test_seq_bits);
            print_battery(rep);
            if (!rep.all_pass) return 1;
        } else if (*stab_cmd) {
            const auto trace = stab_open_loop ? run_open_loop(plant, stab_duration)
                                              : run_closed_loop(plant, gains, stab_duration);
            if (!stab_out.empty()) {
                std::ofstream f(stab_out, std::ios::trunc);
                f << "# t_s\tout1_mw\tphi_rad\tcontrol_rad\n";
                for (std::size_t i = 0; i < trace.t_s.size(); ++i)
                    f << trace.t_s[i] << '\t' << trace.out1_mw[i] << '\t' << trace.phi_rad[i]
                      << '\t' << trace.control_rad[i] << '\n';
            }
            std::printf("steps = %zu, RMS deviation = %.4f%% of input power, wraps = %zu\n",
                        trace.t_s.size(), 100.0 * trace.rms_deviation_fraction,
                        trace.wrap_events);
            for (const auto& ev : trace.events) std::printf("event: %s\n", ev.c_str());
        } else if (*bench_cmd) {
            ExtractionPolicy policy{bench_hmin, 0x1p-100, bench_n};
            const std::size_t m = output_length(bench_n, policy);
            const auto spec = make_spec(parse_master_seed(bench_master), bench_n, m);
            const auto r = bench_throughput(spec, bench_seconds, bench_naive);
            std::printf("%s path: in %.3f Mbps, out %.3f Mbps, block latency %.3f ms "
                        "(n=%zu, m=%zu, blocks=%zu)\n",
                        r.path.c_str(), r.input_mbps, r.output_mbps, r.block_latency_ms, bench_n,
                        m, r.blocks);
        } else if (*run_cmd) {
            PipelineConfig cfg;
            if (!run_config.empty()) cfg = PipelineConfig::from_json_file(run_config);
            else if (!run_preset.empty()) cfg = PipelineConfig::preset(run_preset);
            else throw std::runtime_error("run needs --config or --preset");
            if (!run_out_dir.empty()) cfg.out_dir = run_out_dir;
            if (!run_master.empty()) cfg.master_seed_hex = run_master;
            if (!run_stages.empty()) cfg.stages = run_stages;
            const auto report = run_pipeline(cfg);
            std::fputs(report_to_string(report, true).c_str(), stdout);
        }
        return 0;
    } catch (const PipelineError& ex) {
        std::fprintf(stderr, "error in stage %s: %s\n", ex.stage.c_str(), ex.what());
        return 1;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
}

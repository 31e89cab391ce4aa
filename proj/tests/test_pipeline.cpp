#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "qrng/io.hpp"
#include "qrng/pipeline.hpp"

using namespace qrng;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("qrng_pipe_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string dir() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PipelineConfig small_run_config(const std::string& out_dir) {
    PipelineConfig cfg = PipelineConfig::preset("paper-10gsps");
    cfg.out_dir = out_dir;
    cfg.stages = {"acquire", "entropy", "extract", "test"};
    cfg.acquire_samples = 1 << 20;           // ~8.4 Mbit of raw data
    cfg.policy.block_n = std::size_t{1} << 19;
    cfg.test_sequence_bits = 200000;
    return cfg;
}

}  // namespace

TEST_CASE("presets carry the four sampling-rate columns") {
    const auto names = PipelineConfig::preset_names();
    REQUIRE(names.size() == 4);
    const auto p1 = PipelineConfig::preset("paper-1gsps");
    CHECK(p1.aq_mv2_per_mw == doctest::Approx(6.0142));
    CHECK(p1.sample_rate_gsps == 1.0);
    const auto p10 = PipelineConfig::preset("paper-10gsps");
    CHECK(p10.aq_mv2_per_mw == doctest::Approx(6.2068));
    CHECK(p10.gamma_pin.has_value());
    CHECK(*p10.gamma_pin == doctest::Approx(5.46));
    CHECK_THROWS_AS((void)PipelineConfig::preset("paper-20gsps"), std::invalid_argument);
}

TEST_CASE("config JSON round-trip") {
    auto cfg = PipelineConfig::preset("paper-5gsps");
    cfg.acquire_samples = 123456;
    cfg.policy.hmin_per_bit = 0.77;
    const auto j = cfg.to_json();
    const auto back = PipelineConfig::from_json(j);
    CHECK(back.aq_mv2_per_mw == doctest::Approx(cfg.aq_mv2_per_mw));
    CHECK(back.acquire_samples == 123456);
    CHECK(back.policy.hmin_per_bit == doctest::Approx(0.77));
    CHECK(back.sample_rate_gsps == 5.0);
}

TEST_CASE("entropy stage alone reproduces the headline numbers") {
    TempDir tmp("headline");
    PipelineConfig cfg = PipelineConfig::preset("paper-10gsps");
    cfg.out_dir = tmp.dir();
    cfg.stages = {"entropy"};
    const auto report = run_pipeline(cfg);
    const auto& e = report.data.at("entropy");
    CHECK(e.at("gamma").get<double>() == doctest::Approx(5.46));
    const double sigma_q = e.at("quantum_var_mv2").get<double>();
    CHECK(sigma_q > 4.38);
    CHECK(sigma_q < 4.50);
    const double hmin = e.at("hmin_per_sample").get<double>();
    CHECK(hmin > 6.95);
    CHECK(hmin < 7.15);
    CHECK(e.at("raw_rate_gbps").get<double>() == doctest::Approx(hmin * 10.0).epsilon(1e-12));
    CHECK(e.at("final_rate_gbps").get<double>() == doctest::Approx(68.57).epsilon(1e-3));
    CHECK(report.rates_consistent());
    CHECK(fs::exists(tmp.file("report.json")));
}

TEST_CASE("simulate stage alone writes the variance table and stops") {
    TempDir tmp("simonly");
    PipelineConfig cfg = PipelineConfig::preset("paper-10gsps");
    cfg.out_dir = tmp.dir();
    cfg.stages = {"simulate"};
    cfg.fit_powers_mw = {0.5, 1.0, 3.0, 6.0};
    cfg.fit_samples_per_point = 40000;
    const auto report = run_pipeline(cfg);
    CHECK(fs::exists(tmp.file("variance_points.txt")));
    CHECK_FALSE(fs::exists(tmp.file("trace.bin")));
    const auto points = read_variance_table(tmp.file("variance_points.txt"));
    REQUIRE(points.size() == 4);
    // measured variances should sit near the model line
    for (const auto& p : points) {
        const double model = 6.2068 * p.power_mw + 0.3958 * p.power_mw * p.power_mw + 0.2162;
        CHECK(p.variance_mv2 == doctest::Approx(model).epsilon(0.05));
    }
    CHECK(report.data.contains("simulate"));
}

TEST_CASE("full desk-scale run produces consistent artifacts") {
    TempDir tmp("full");
    const auto cfg = small_run_config(tmp.dir());
    const auto report = run_pipeline(cfg);

    CHECK(fs::exists(tmp.file("trace.bin")));
    CHECK(fs::exists(tmp.file("trace.json")));
    CHECK(fs::exists(tmp.file("toeplitz_seed.bits")));
    CHECK(fs::exists(tmp.file("extracted.bits")));
    CHECK(fs::exists(tmp.file("extracted.json")));
    CHECK(fs::exists(tmp.file("report.json")));

    const auto& ext = report.data.at("extract");
    const auto meta = read_extraction_meta(tmp.file("extracted.json"));
    CHECK(meta.n == ext.at("n").get<std::size_t>());
    CHECK(meta.block_count == ext.at("blocks").get<std::size_t>());
    const auto bits = read_bits(tmp.file("extracted.bits"));
    CHECK(bits.size() == ext.at("output_bits").get<std::size_t>());
    CHECK(bits.size() == meta.m * meta.block_count);

    // the extractor stayed within the assessed budget
    const double hmin = report.data.at("entropy").at("hmin_per_bit").get<double>();
    CHECK(static_cast<double>(meta.m) <= hmin * static_cast<double>(meta.n));

    // extracted output passes the battery at desk scale
    CHECK(report.data.at("test").at("all_pass").get<bool>());
    CHECK(report.rates_consistent());
}

TEST_CASE("rerun with the same master seed is byte-identical") {
    TempDir a("det_a"), b("det_b");
    auto cfg_a = small_run_config(a.dir());
    auto cfg_b = small_run_config(b.dir());
    (void)run_pipeline(cfg_a);
    (void)run_pipeline(cfg_b);
    for (const char* name : {"trace.bin", "trace.json", "toeplitz_seed.bits", "extracted.bits",
                             "extracted.json"}) {
        CAPTURE(name);
        CHECK(slurp(a.file(name)) == slurp(b.file(name)));
    }
    // reports differ only in out_dir, so compare after normalizing it
    auto ra = nlohmann::json::parse(slurp(a.file("report.json")));
    auto rb = nlohmann::json::parse(slurp(b.file("report.json")));
    ra["config"]["out_dir"] = rb["config"]["out_dir"] = "";
    CHECK(ra == rb);
}

TEST_CASE("a different master seed changes the artifacts") {
    TempDir a("seed_a"), b("seed_b");
    auto cfg_a = small_run_config(a.dir());
    auto cfg_b = small_run_config(b.dir());
    cfg_b.master_seed_hex =
        "ffeeddccbbaa99887766554433221100ffeeddccbbaa99887766554433221100";
    (void)run_pipeline(cfg_a);
    (void)run_pipeline(cfg_b);
    CHECK(slurp(a.file("trace.bin")) != slurp(b.file("trace.bin")));
    CHECK(slurp(a.file("extracted.bits")) != slurp(b.file("extracted.bits")));
}

TEST_CASE("stage failures name the stage and keep partial artifacts") {
    TempDir tmp("fail");
    PipelineConfig cfg = PipelineConfig::preset("paper-10gsps");
    cfg.out_dir = tmp.dir();
    cfg.stages = {"extract"};  // no trace available
    try {
        (void)run_pipeline(cfg);
        FAIL("expected PipelineError");
    } catch (const PipelineError& ex) {
        CHECK(ex.stage == "extract");
    }
}

TEST_CASE("invalid master seed is rejected up front") {
    PipelineConfig cfg = PipelineConfig::preset("paper-10gsps");
    cfg.master_seed_hex = "123";
    CHECK_THROWS_AS((void)run_pipeline(cfg), std::invalid_argument);
}

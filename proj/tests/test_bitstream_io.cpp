#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "qrng/bitstream.hpp"
#include "qrng/io.hpp"
#include "qrng/physsim.hpp"
#include "qrng/rng.hpp"

using namespace qrng;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("qrng_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

BitStream random_bits(std::uint64_t seed, std::size_t n) {
    Philox rng(seed);
    BitStream b(n);
    for (std::size_t i = 0; i < n; ++i) b.set(i, rng.next_u32() & 1);
    return b;
}

}  // namespace

TEST_CASE("bit order is LSB-first within bytes") {
    const std::uint8_t bytes[] = {0x01, 0x80};
    const auto bits = BitStream::from_bytes(bytes);
    REQUIRE(bits.size() == 16);
    CHECK(bits.get(0) == true);   // LSB of byte 0
    CHECK(bits.get(7) == false);
    CHECK(bits.get(8) == false);
    CHECK(bits.get(15) == true);  // MSB of byte 1
    const auto back = bits.to_bytes();
    CHECK(back[0] == 0x01);
    CHECK(back[1] == 0x80);
}

TEST_CASE("append and slice round-trip at unaligned offsets") {
    Philox rng(5);
    for (const std::size_t la : {1, 7, 63, 64, 65, 130}) {
        for (const std::size_t lb : {1, 3, 64, 100}) {
            BitStream a = random_bits(rng.next_u64(), la);
            BitStream b = random_bits(rng.next_u64(), lb);
            BitStream joined = a;
            joined.append(b);
            REQUIRE(joined.size() == la + lb);
            CHECK(joined.slice(0, la) == a);
            CHECK(joined.slice(la, lb) == b);
            for (std::size_t i = 0; i < lb; ++i)
                if (joined.get(la + i) != b.get(i)) {
                    CAPTURE(la);
                    CAPTURE(lb);
                    REQUIRE(false);
                }
        }
    }
}

TEST_CASE("pad bits stay zero so whole-word operations need no masking") {
    BitStream b(70);
    for (std::size_t i = 0; i < 70; ++i) b.set(i, true);
    const auto words = b.words();
    CHECK(words[1] == 0x3F);  // only 6 live bits in the second word
    BitStream sliced = random_bits(1, 130).slice(3, 70);
    std::uint64_t pad = sliced.words()[1] >> 6;
    CHECK(pad == 0);
}

TEST_CASE("count_ones and xor") {
    BitStream a{1, 0, 1, 1, 0};
    BitStream b{0, 0, 1, 0, 1};
    CHECK(a.count_ones() == 3);
    const auto x = a ^ b;
    CHECK(x == BitStream{1, 0, 0, 1, 1});
    CHECK_THROWS_AS(a ^ BitStream(4), std::invalid_argument);
}

TEST_CASE("from_string parses and rejects") {
    CHECK(BitStream::from_string("1011") == BitStream{1, 0, 1, 1});
    CHECK_THROWS_AS(BitStream::from_string("10x1"), std::invalid_argument);
}

TEST_CASE("trace file round-trip is bit-exact with metadata") {
    TempDir tmp;
    SimConfig cfg = SimConfig::from_fitted(6.2068, 0.3958, 0.2162, 0.9, 10.0);
    cfg.rng_seed = 99;
    const auto trace = simulate_trace(cfg, AdcConfig::auto_for(cfg), 20000);
    write_trace(trace, tmp.file("t.bin"), tmp.file("t.json"), &cfg);

    // code i at byte offset i
    CHECK(fs::file_size(tmp.file("t.bin")) == trace.size());
    const auto back = read_trace(tmp.file("t.bin"), tmp.file("t.json"));
    CHECK(back.codes == trace.codes);
    CHECK(back.sample_rate_gsps == trace.sample_rate_gsps);
    CHECK(back.adc.volts_per_code == doctest::Approx(trace.adc.volts_per_code).epsilon(1e-12));
    CHECK(back.rng_seed == 99);
    CHECK(back.voltage(0) == doctest::Approx(trace.voltage(0)).epsilon(1e-12));
}

TEST_CASE("packed-bit container round-trips exact lengths") {
    TempDir tmp;
    for (const std::size_t n : {1, 8, 63, 64, 65, 1000, 12345}) {
        const auto bits = random_bits(n, n);
        write_bits(bits, tmp.file("b.bits"));
        CHECK(read_bits(tmp.file("b.bits")) == bits);
    }
    CHECK_THROWS_AS((void)read_bits("/nonexistent/x.bits"), std::runtime_error);
}

TEST_CASE("ascii and raw exports") {
    TempDir tmp;
    const BitStream bits{1, 0, 1, 1, 0, 0, 0, 1, 1};
    write_bits_ascii(bits, tmp.file("a.txt"));
    std::FILE* f = std::fopen(tmp.file("a.txt").c_str(), "rb");
    char buf[16] = {};
    const auto got = std::fread(buf, 1, sizeof buf, f);
    std::fclose(f);
    CHECK(std::string(buf, got) == "101100011");
    write_bits_raw(bits, tmp.file("a.bin"));
    CHECK(fs::file_size(tmp.file("a.bin")) == 2);
}

TEST_CASE("variance table round-trip") {
    TempDir tmp;
    std::vector<VariancePoint> pts = {{0.5, 3.25, 1000000}, {1.0, 6.5, 1000000}, {2.0, 14.0, 500}};
    write_variance_table(pts, tmp.file("v.txt"));
    const auto back = read_variance_table(tmp.file("v.txt"));
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].power_mw == doctest::Approx(pts[i].power_mw).epsilon(1e-9));
        CHECK(back[i].variance_mv2 == doctest::Approx(pts[i].variance_mv2).epsilon(1e-9));
        CHECK(back[i].n_samples == pts[i].n_samples);
    }
}

TEST_CASE("extraction metadata round-trip") {
    TempDir tmp;
    ExtractionMeta meta{1048576, 922546, 32, "00aabbccddeeff11"};
    write_extraction_meta(meta, tmp.file("m.json"));
    const auto back = read_extraction_meta(tmp.file("m.json"));
    CHECK(back.n == meta.n);
    CHECK(back.m == meta.m);
    CHECK(back.block_count == meta.block_count);
    CHECK(back.master_seed_fingerprint == meta.master_seed_fingerprint);
}

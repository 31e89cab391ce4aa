#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrng/bitstream.hpp"
#include "qrng/rng.hpp"

namespace qrng {

/// Dimensions and seed of one Toeplitz hashing instance.
///
/// The m x n binary Toeplitz matrix T is defined by its diagonal values
/// d[k], k in [-(n-1), m-1], with T[i][j] = d[i-j]. The seed stores them as
/// seed[t] = d[t-(n-1)], i.e. seed[0..n-1] is the first row right-to-left
/// and seed[n-1..n+m-2] is the first column top-down. This layout is frozen
/// for cross-implementation compatibility.
struct ToeplitzSpec {
    std::size_t n = 0;  // input bits
    std::size_t m = 0;  // output bits
    BitStream seed;     // exactly n + m - 1 bits

    void validate() const;
};

/// Leftover-hash output sizing: how many bits may be extracted from n input
/// bits of assessed entropy rate hmin_per_bit at security parameter epsilon.
struct ExtractionPolicy {
    double hmin_per_bit = 0.88;
    double epsilon = 0x1p-100;
    std::size_t block_n = std::size_t{1} << 20;

    void validate() const;
};

/// y = T x over GF(2). Fast path: the product is the middle slice of the
/// carryless polynomial product seed(z) * x(z): y_i = coefficient n-1+i.
/// Exact by construction (GF(2) limb arithmetic, no floating point);
/// bit-for-bit equal to toeplitz_extract_naive.
BitStream toeplitz_extract(const ToeplitzSpec& spec, const BitStream& input);

/// Reference double-loop evaluation of y = T x. O(n*m); the baseline the
/// fast path is benchmarked against.
BitStream toeplitz_extract_naive(const ToeplitzSpec& spec, const BitStream& input);

/// m = floor(n * hmin - 2*log2(1/epsilon)). Throws std::runtime_error when
/// the entropy budget leaves no output bits.
std::size_t output_length(std::size_t n, const ExtractionPolicy& policy);

/// Deterministic seed expansion: n+m-1 Toeplitz seed bits from the 256-bit
/// master seed (Philox keyed by derive_seed(master, "toeplitz-seed")).
BitStream expand_toeplitz_seed(const MasterSeed& master, std::size_t n, std::size_t m);

ToeplitzSpec make_spec(const MasterSeed& master, std::size_t n, std::size_t m);

enum class TailPolicy {
    reject,  // a truncated final block is an error
    drop,    // a truncated final block is discarded
};

/// Splits `input` into consecutive blocks of spec.n bits, extracts each with
/// the same seed (sound for strong extractors), and concatenates the outputs
/// in input order. Blocks may be processed in parallel (QRNG_THREADS caps
/// the workers); the result is identical to sequential processing.
BitStream extract_stream(const ToeplitzSpec& spec, const BitStream& input,
                         TailPolicy tail = TailPolicy::drop);

struct BenchResult {
    double input_mbps = 0.0;
    double output_mbps = 0.0;
    double block_latency_ms = 0.0;
    std::size_t blocks = 0;
    std::string path;  // "fast" or "naive"
};

/// Steady-state extraction throughput on synthetic input, measured over at
/// least `min_seconds` of wall time (at least one block).
BenchResult bench_throughput(const ToeplitzSpec& spec, double min_seconds, bool naive = false);

}  // namespace qrng

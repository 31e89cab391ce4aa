#pragma once

#include <span>
#include <string>
#include <vector>

#include "qrng/bitstream.hpp"

namespace qrng {

struct AutocorrResult {
    std::vector<int> lags;       // 0 .. max_lag
    std::vector<double> coeffs;  // Pearson autocorrelation per lag, coeff(0) = 1
    std::size_t n = 0;
    double sigma_null = 0.0;  // 1/sqrt(n)

    double max_abs_beyond_lag0() const;
};

enum class AutocorrMethod { automatic, direct, transform };

/// Normalized autocorrelation rho(k) = Cov(x_t, x_{t+k}) / Var(x). The
/// direct sum and the FFT route agree to 1e-10; `automatic` picks by
/// workload. Throws on zero-variance input.
AutocorrResult autocorrelation(std::span<const double> series, int max_lag,
                               AutocorrMethod method = AutocorrMethod::automatic);
/// Bits are mapped {0 -> 0.0, 1 -> 1.0} before centering.
AutocorrResult autocorrelation(const BitStream& bits, int max_lag,
                               AutocorrMethod method = AutocorrMethod::automatic);

/// Parameters for the implemented SP 800-22 subset. Block sizes follow the
/// published defaults.
struct NistConfig {
    std::size_t block_frequency_m = 128;
    int serial_m = 16;
    int apen_m = 10;
    double alpha = 0.01;
};

/// Result of one test applied to one sequence. Tests producing several
/// statistics (cumulative sums, serial) return several p-values.
struct TestOutcome {
    std::string name;
    std::vector<double> p_values;
    bool skipped = false;
    std::string note;
};

/// The implemented subset: Frequency, Block Frequency, Cumulative Sums,
/// Runs, Longest Run of Ones, Spectral (DFT), Serial, Approximate Entropy.
/// Tests whose length requirements are not met come back skipped.
std::vector<TestOutcome> nist_subset(const BitStream& bits, const NistConfig& cfg = {});

/// KS-uniformity + pass-proportion summary of a set of p-values.
struct Aggregate {
    double ks_p = 0.0;       // one-sample KS against Uniform[0,1]
    double proportion = 0.0; // fraction of p-values >= alpha
    bool pass = false;       // ks_p >= 1e-4 and proportion above the confidence bound
    std::size_t count = 0;
};

Aggregate aggregate(std::span<const double> p_values, double alpha = 0.01);

/// One row of the battery report.
struct TestRow {
    std::string name;
    double ks_p = 0.0;
    double proportion = 0.0;  // averaged over the test's outcome streams
    bool pass = false;
    bool skipped = false;
    std::size_t outcomes = 1;
};

struct TestReport {
    std::vector<TestRow> rows;
    double alpha = 0.01;
    std::size_t sequences = 0;
    std::size_t sequence_bits = 0;
    bool all_pass = false;
    std::size_t failed_tests = 0;
};

/// Splits the input into consecutive sequences of seq_len bits (a trailing
/// partial sequence is dropped), runs the subset on each, and aggregates
/// per test. Sequences are processed in parallel up to QRNG_THREADS.
TestReport run_battery(const BitStream& bits, std::size_t seq_len, const NistConfig& cfg = {});

}  // namespace qrng

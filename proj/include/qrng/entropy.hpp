#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qrng/physsim.hpp"

namespace qrng {

/// Clipped-histogram parameters: the top and bottom clip_fraction of the
/// sorted samples are moved onto the range boundaries before binning.
struct HistogramSpec {
    double clip_fraction = 0.001;
    int n_bins = 256;

    void validate() const;
};

/// Result of the empirical clipped-histogram estimate.
struct EmpiricalEntropy {
    double v_min = 0.0, v_max = 0.0;  // raw extremes
    double v1 = 0.0, v2 = 0.0;        // effective range after clipping
    double p_max = 1.0;
    double hmin_per_sample = 0.0;
    double hmin_per_bit = 0.0;
    bool degenerate = false;  // v1 == v2
    std::size_t n = 0;
    std::vector<std::uint64_t> histogram;
};

/// Headline entropy accounting record.
struct EntropyReport {
    double gamma = 0.0;
    double total_var_mv2 = 0.0;
    double quantum_var_mv2 = 0.0;
    double v1_mv = 0.0, v2_mv = 0.0;
    double p_max = 1.0;
    double hmin_per_sample = 0.0;
    double hmin_per_bit = 0.0;
    double raw_rate_gbps = 0.0;
    double final_rate_gbps = 0.0;
};

/// sigma_q^2 = gamma/(gamma+1) * total.
double quantum_variance(double total_var_mv2, double gamma);

/// Worst-case bin probability of a Gaussian of variance quantum_var over
/// n_bins equal bins spanning [v1, v2], mean at mid-range.
///
/// The distribution is truncated to the effective range (the clipping step
/// pins everything into [v1, v2]) and the bin grid is taken at the
/// least-favorable phase relative to the mean, i.e. one bin centered on it;
/// this keeps the estimate a lower bound on randomness regardless of where
/// the empirical grid happens to sit.
double gaussian_pmax(double quantum_var_mv2, double v1_mv, double v2_mv, int n_bins);

/// -log2(gaussian_pmax), in bits per sample. quantum_var = 0 gives 0 bits.
double gaussian_min_entropy(double quantum_var_mv2, double v1_mv, double v2_mv, int n_bins);

/// Clipped-histogram min-entropy of raw sample values. Needs >= 1e4 points
/// (tail quantiles are meaningless below that). A collapsed range is
/// reported via the degenerate flag, not an exception.
EmpiricalEntropy empirical_min_entropy(std::span<const double> values, const HistogramSpec& spec);
EmpiricalEntropy empirical_min_entropy(const VoltageTrace& trace, const HistogramSpec& spec);

/// Min-entropy as a function of gamma at fixed total variance and range.
/// Monotone nondecreasing; steep at small gamma, flat past gamma ~ 5.
std::vector<std::pair<double, double>> min_entropy_vs_gamma(double total_var_mv2, double v1_mv,
                                                            double v2_mv, int n_bins,
                                                            std::span<const double> gammas);

struct RateAccount {
    double raw_rate_gbps = 0.0;
    double final_rate_gbps = 0.0;
};

/// raw = hmin_per_sample * rate; final = 8 * (m/n) * rate. Rejects m
/// beyond the assessed per-bit entropy budget.
RateAccount rate_accounting(double hmin_per_sample, double sample_rate_gsps, std::size_t n,
                            std::size_t m);

/// Assembles the model-path report from the direct-measurement gamma, the
/// empirical range, and the extractor dimensions.
EntropyReport model_entropy_report(double gamma, double total_var_mv2, double v1_mv, double v2_mv,
                                   int n_bins, double sample_rate_gsps, std::size_t n,
                                   std::size_t m);

}  // namespace qrng

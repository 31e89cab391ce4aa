#include "qrng/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qrng {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244); }

}  // namespace

void HistogramSpec::validate() const {
    if (!(clip_fraction >= 0.0) || clip_fraction >= 0.5)
        throw std::invalid_argument("clip_fraction must lie in [0, 0.5)");
    if (n_bins < 2) throw std::invalid_argument("n_bins must be >= 2");
}

double quantum_variance(double total_var_mv2, double gamma) {
    if (total_var_mv2 < 0) throw std::invalid_argument("total variance must be >= 0");
    if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
    return gamma / (gamma + 1.0) * total_var_mv2;
}

double gaussian_pmax(double quantum_var_mv2, double v1_mv, double v2_mv, int n_bins) {
    if (!(v2_mv > v1_mv)) throw std::invalid_argument("range requires v2 > v1");
    if (n_bins < 2) throw std::invalid_argument("n_bins must be >= 2");
    if (quantum_var_mv2 < 0) throw std::invalid_argument("quantum variance must be >= 0");
    if (quantum_var_mv2 == 0) return 1.0;  // point mass in one bin
    const double sigma = std::sqrt(quantum_var_mv2);
    const double w = (v2_mv - v1_mv) / n_bins;
    const double half_range = 0.5 * (v2_mv - v1_mv);
    const double z_trunc = 2.0 * normal_cdf(half_range / sigma) - 1.0;  // mass kept by clipping
    const double p_center = 2.0 * normal_cdf(0.5 * w / sigma) - 1.0;    // bin centered on the mean
    return std::min(1.0, p_center / z_trunc);
}

double gaussian_min_entropy(double quantum_var_mv2, double v1_mv, double v2_mv, int n_bins) {
    return -std::log2(gaussian_pmax(quantum_var_mv2, v1_mv, v2_mv, n_bins));
}

EmpiricalEntropy empirical_min_entropy(std::span<const double> values, const HistogramSpec& spec) {
    spec.validate();
    if (values.size() < 10000)
        throw std::invalid_argument("empirical estimate needs at least 1e4 samples");

    EmpiricalEntropy out;
    out.n = values.size();
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    out.v_min = *mn;
    out.v_max = *mx;

    // nearest-rank quantiles: rank ceil(q*n), 1-indexed in the sorted order
    std::vector<double> sorted(values.begin(), values.end());
    const auto n = sorted.size();
    auto rank_of = [n](double q) {
        const auto r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
        return std::clamp<std::size_t>(r, 1, n) - 1;  // 0-indexed
    };
    const std::size_t lo = rank_of(spec.clip_fraction);
    const std::size_t hi = rank_of(1.0 - spec.clip_fraction);
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(lo),
                     sorted.end());
    out.v1 = sorted[lo];
    std::nth_element(sorted.begin() + static_cast<std::ptrdiff_t>(lo),
                     sorted.begin() + static_cast<std::ptrdiff_t>(hi), sorted.end());
    out.v2 = sorted[hi];

    if (out.v1 == out.v2) {
        out.degenerate = true;
        out.p_max = 1.0;
        out.hmin_per_sample = 0.0;
        out.hmin_per_bit = 0.0;
        out.histogram.assign(static_cast<std::size_t>(spec.n_bins), 0);
        out.histogram[0] = n;
        return out;
    }

    // left-closed bins over [v1, v2], last bin right-closed; clipped values
    // land on the boundaries and therefore in the outermost bins
    out.histogram.assign(static_cast<std::size_t>(spec.n_bins), 0);
    const double w = (out.v2 - out.v1) / spec.n_bins;
    for (double v : values) {
        auto idx = static_cast<long>(std::floor((v - out.v1) / w));
        idx = std::clamp<long>(idx, 0, spec.n_bins - 1);
        ++out.histogram[static_cast<std::size_t>(idx)];
    }
    const std::uint64_t max_count = *std::max_element(out.histogram.begin(), out.histogram.end());
    out.p_max = static_cast<double>(max_count) / static_cast<double>(n);
    out.hmin_per_sample = -std::log2(out.p_max);
    out.hmin_per_bit = out.hmin_per_sample / 8.0;
    return out;
}

EmpiricalEntropy empirical_min_entropy(const VoltageTrace& trace, const HistogramSpec& spec) {
    return empirical_min_entropy(trace.voltages(), spec);
}

std::vector<std::pair<double, double>> min_entropy_vs_gamma(double total_var_mv2, double v1_mv,
                                                            double v2_mv, int n_bins,
                                                            std::span<const double> gammas) {
    std::vector<std::pair<double, double>> curve;
    curve.reserve(gammas.size());
    for (double g : gammas) {
        const double var_q = quantum_variance(total_var_mv2, g);
        curve.emplace_back(g, gaussian_min_entropy(var_q, v1_mv, v2_mv, n_bins));
    }
    return curve;
}

RateAccount rate_accounting(double hmin_per_sample, double sample_rate_gsps, std::size_t n,
                            std::size_t m) {
    if (hmin_per_sample < 0 || hmin_per_sample > 8)
        throw std::invalid_argument("hmin_per_sample must lie in [0, 8]");
    if (sample_rate_gsps < 0) throw std::invalid_argument("sample rate must be >= 0");
    if (m == 0 || m > n) throw std::invalid_argument("extractor sizes require 0 < m <= n");
    const double hmin_per_bit = hmin_per_sample / 8.0;
    if (static_cast<double>(m) > static_cast<double>(n) * hmin_per_bit)
        throw std::runtime_error("over-extraction: m exceeds the assessed entropy budget n*hmin");
    RateAccount acct;
    acct.raw_rate_gbps = hmin_per_sample * sample_rate_gsps;
    acct.final_rate_gbps =
        8.0 * (static_cast<double>(m) / static_cast<double>(n)) * sample_rate_gsps;
    return acct;
}

EntropyReport model_entropy_report(double gamma, double total_var_mv2, double v1_mv, double v2_mv,
                                   int n_bins, double sample_rate_gsps, std::size_t n,
                                   std::size_t m) {
    EntropyReport rep;
    rep.gamma = gamma;
    rep.total_var_mv2 = total_var_mv2;
    rep.quantum_var_mv2 = quantum_variance(total_var_mv2, gamma);
    rep.v1_mv = v1_mv;
    rep.v2_mv = v2_mv;
    rep.p_max = gaussian_pmax(rep.quantum_var_mv2, v1_mv, v2_mv, n_bins);
    rep.hmin_per_sample = -std::log2(rep.p_max);
    rep.hmin_per_bit = rep.hmin_per_sample / 8.0;
    const auto rates = rate_accounting(rep.hmin_per_sample, sample_rate_gsps, n, m);
    rep.raw_rate_gbps = rates.raw_rate_gbps;
    rep.final_rate_gbps = rates.final_rate_gbps;
    return rep;
}

}  // namespace qrng

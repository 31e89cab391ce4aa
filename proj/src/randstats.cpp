#include "qrng/randstats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <future>
#include <stdexcept>
#include <thread>

#include "fft_util.hpp"
#include "special.hpp"

namespace qrng {

namespace {

using detail::igamc;
using detail::kolmogorov_q;
using detail::normal_cdf;

std::size_t env_thread_cap() {
    const char* v = std::getenv("QRNG_THREADS");
    if (!v) return std::max(1u, std::thread::hardware_concurrency());
    const long n = std::strtol(v, nullptr, 10);
    return n > 0 ? static_cast<std::size_t>(n) : 1;
}

std::vector<std::uint8_t> unpack_bits(const BitStream& bits) {
    std::vector<std::uint8_t> out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) out[i] = bits.get(i) ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------------------
// individual SP 800-22 statistics
// ---------------------------------------------------------------------------

TestOutcome frequency_test(const std::vector<std::uint8_t>& e) {
    const auto n = static_cast<double>(e.size());
    if (e.size() < 100) return {"Frequency", {}, true, "needs n >= 100"};
    long s = 0;
    for (auto b : e) s += b ? 1 : -1;
    const double p = std::erfc(std::fabs(static_cast<double>(s)) / std::sqrt(2.0 * n));
    return {"Frequency", {p}, false, {}};
}

TestOutcome block_frequency_test(const std::vector<std::uint8_t>& e, std::size_t M) {
    if (e.size() < 100 || e.size() < M) return {"BlockFrequency", {}, true, "needs n >= 100"};
    const std::size_t N = e.size() / M;
    double chi2 = 0.0;
    for (std::size_t b = 0; b < N; ++b) {
        std::size_t ones = 0;
        for (std::size_t i = 0; i < M; ++i) ones += e[b * M + i];
        const double pi = static_cast<double>(ones) / static_cast<double>(M);
        chi2 += (pi - 0.5) * (pi - 0.5);
    }
    chi2 *= 4.0 * static_cast<double>(M);
    const double p = igamc(static_cast<double>(N) / 2.0, chi2 / 2.0);
    return {"BlockFrequency", {p}, false, {}};
}

double cusum_p_value(std::size_t n, long z) {
    if (z == 0) return 0.0;  // degenerate constant-sum sequence
    const double zn = static_cast<double>(z);
    const double sn = std::sqrt(static_cast<double>(n));
    const auto dn = static_cast<double>(n);
    double p = 1.0;
    const long k1_lo = static_cast<long>(std::floor((-dn / zn + 1.0) / 4.0));
    const long k1_hi = static_cast<long>(std::floor((dn / zn - 1.0) / 4.0));
    for (long k = k1_lo; k <= k1_hi; ++k) {
        const double a = (4.0 * static_cast<double>(k) + 1.0) * zn / sn;
        const double b = (4.0 * static_cast<double>(k) - 1.0) * zn / sn;
        p -= normal_cdf(a) - normal_cdf(b);
    }
    const long k2_lo = static_cast<long>(std::floor((-dn / zn - 3.0) / 4.0));
    for (long k = k2_lo; k <= k1_hi; ++k) {
        const double a = (4.0 * static_cast<double>(k) + 3.0) * zn / sn;
        const double b = (4.0 * static_cast<double>(k) + 1.0) * zn / sn;
        p += normal_cdf(a) - normal_cdf(b);
    }
    return std::clamp(p, 0.0, 1.0);
}

TestOutcome cumulative_sums_test(const std::vector<std::uint8_t>& e) {
    if (e.size() < 100) return {"CumulativeSums", {}, true, "needs n >= 100"};
    long s = 0, z_fwd = 0;
    for (auto b : e) {
        s += b ? 1 : -1;
        z_fwd = std::max(z_fwd, std::labs(s));
    }
    s = 0;
    long z_bwd = 0;
    for (auto it = e.rbegin(); it != e.rend(); ++it) {
        s += *it ? 1 : -1;
        z_bwd = std::max(z_bwd, std::labs(s));
    }
    return {"CumulativeSums", {cusum_p_value(e.size(), z_fwd), cusum_p_value(e.size(), z_bwd)},
            false,
            {}};
}

TestOutcome runs_test(const std::vector<std::uint8_t>& e) {
    const auto n = static_cast<double>(e.size());
    if (e.size() < 100) return {"Runs", {}, true, "needs n >= 100"};
    std::size_t ones = 0;
    for (auto b : e) ones += b;
    const double pi = static_cast<double>(ones) / n;
    if (std::fabs(pi - 0.5) >= 2.0 / std::sqrt(n)) return {"Runs", {0.0}, false, "frequency precheck failed"};
    std::size_t v = 1;
    for (std::size_t i = 1; i < e.size(); ++i) v += e[i] != e[i - 1];
    const double num = std::fabs(static_cast<double>(v) - 2.0 * n * pi * (1.0 - pi));
    const double den = 2.0 * std::sqrt(2.0 * n) * pi * (1.0 - pi);
    return {"Runs", {std::erfc(num / den)}, false, {}};
}

TestOutcome longest_run_test(const std::vector<std::uint8_t>& e) {
    const std::size_t n = e.size();
    std::size_t M;
    int K;
    std::vector<double> pi;
    long cat_lo, cat_hi;
    if (n >= 750000) {
        M = 10000, K = 6;
        pi = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
        cat_lo = 10, cat_hi = 16;
    } else if (n >= 6272) {
        M = 128, K = 5;
        pi = {0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124};
        cat_lo = 4, cat_hi = 9;
    } else if (n >= 128) {
        M = 8, K = 3;
        pi = {0.2148, 0.3672, 0.2305, 0.1875};
        cat_lo = 1, cat_hi = 4;
    } else {
        return {"LongestRun", {}, true, "needs n >= 128"};
    }
    const std::size_t N = n / M;
    std::vector<std::size_t> nu(static_cast<std::size_t>(K) + 1, 0);
    for (std::size_t b = 0; b < N; ++b) {
        long longest = 0, run = 0;
        for (std::size_t i = 0; i < M; ++i) {
            run = e[b * M + i] ? run + 1 : 0;
            longest = std::max(longest, run);
        }
        const long cat = std::clamp(longest, cat_lo, cat_hi) - cat_lo;
        ++nu[static_cast<std::size_t>(cat)];
    }
    double chi2 = 0.0;
    for (std::size_t k = 0; k < nu.size(); ++k) {
        const double expect = static_cast<double>(N) * pi[k];
        const double d = static_cast<double>(nu[k]) - expect;
        chi2 += d * d / expect;
    }
    const double p = igamc(static_cast<double>(K) / 2.0, chi2 / 2.0);
    return {"LongestRun", {p}, false, {}};
}

TestOutcome spectral_test(const std::vector<std::uint8_t>& e) {
    const std::size_t n = e.size();
    if (n < 1000) return {"Spectral", {}, true, "needs n >= 1000"};
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = e[i] ? 1.0 : -1.0;
    const auto spec = detail::fft_r2c(x);
    const double threshold = std::sqrt(2.995732273553991 * static_cast<double>(n));  // ln(1/0.05)
    std::size_t n1 = 0;
    const std::size_t half = n / 2;
    for (std::size_t j = 0; j < half; ++j)
        if (std::abs(spec[j]) < threshold) ++n1;
    const double n0 = 0.95 * static_cast<double>(half);
    const double d = (static_cast<double>(n1) - n0) /
                     std::sqrt(static_cast<double>(n) * 0.95 * 0.05 / 4.0);
    return {"Spectral", {std::erfc(std::fabs(d) / std::sqrt(2.0))}, false, {}};
}

// overlapping pattern counts on the cyclically extended sequence
std::vector<std::uint32_t> cyclic_pattern_counts(const std::vector<std::uint8_t>& e, int m) {
    const std::size_t n = e.size();
    std::vector<std::uint32_t> counts(std::size_t{1} << m, 0);
    const std::uint32_t mask = (std::uint32_t{1} << m) - 1;
    std::uint32_t w = 0;
    for (int i = 0; i < m - 1; ++i) w = (w << 1) | e[static_cast<std::size_t>(i)];
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t next = i + static_cast<std::size_t>(m) - 1;
        w = ((w << 1) | e[next >= n ? next - n : next]) & mask;
        ++counts[w];
    }
    return counts;
}

double psi_square(const std::vector<std::uint32_t>& counts, std::size_t n) {
    long double ss = 0.0L;
    for (auto c : counts) ss += static_cast<long double>(c) * c;
    return static_cast<double>(static_cast<long double>(counts.size()) * ss /
                                   static_cast<long double>(n) -
                               static_cast<long double>(n));
}

std::vector<std::uint32_t> fold_counts(const std::vector<std::uint32_t>& counts) {
    std::vector<std::uint32_t> out(counts.size() / 2);
    for (std::size_t v = 0; v < out.size(); ++v) out[v] = counts[2 * v] + counts[2 * v + 1];
    return out;
}

TestOutcome serial_test(const std::vector<std::uint8_t>& e, int m) {
    const std::size_t n = e.size();
    if (m < 3 || n < (std::size_t{1} << (m + 2)))
        return {"Serial", {}, true, "sequence too short for the configured block"};
    const auto counts_m = cyclic_pattern_counts(e, m);
    const auto counts_m1 = fold_counts(counts_m);   // m-1 patterns
    const auto counts_m2 = fold_counts(counts_m1);  // m-2 patterns
    const double psi_m = psi_square(counts_m, n);
    const double psi_m1 = psi_square(counts_m1, n);
    const double psi_m2 = psi_square(counts_m2, n);
    const double d1 = psi_m - psi_m1;
    const double d2 = psi_m - 2.0 * psi_m1 + psi_m2;
    const double p1 = igamc(std::pow(2.0, m - 2), d1 / 2.0);
    const double p2 = igamc(std::pow(2.0, m - 3), d2 / 2.0);
    return {"Serial", {p1, p2}, false, {}};
}

double phi_m(const std::vector<std::uint8_t>& e, int m) {
    const auto counts = cyclic_pattern_counts(e, m);
    const auto n = static_cast<long double>(e.size());
    long double sum = 0.0L;
    for (auto c : counts) {
        if (c == 0) continue;
        const long double pr = static_cast<long double>(c) / n;
        sum += pr * std::log(static_cast<double>(pr));
    }
    return static_cast<double>(sum);
}

TestOutcome approximate_entropy_test(const std::vector<std::uint8_t>& e, int m) {
    const std::size_t n = e.size();
    if (m < 1 || n < (std::size_t{1} << (m + 5)))
        return {"ApproximateEntropy", {}, true, "sequence too short for the configured block"};
    const double apen = phi_m(e, m) - phi_m(e, m + 1);
    const double chi2 = 2.0 * static_cast<double>(n) * (std::log(2.0) - apen);
    const double p = igamc(std::pow(2.0, m - 1), chi2 / 2.0);
    return {"ApproximateEntropy", {p}, false, {}};
}

}  // namespace

// ---------------------------------------------------------------------------
// autocorrelation
// ---------------------------------------------------------------------------

double AutocorrResult::max_abs_beyond_lag0() const {
    double m = 0.0;
    for (std::size_t i = 1; i < coeffs.size(); ++i) m = std::max(m, std::fabs(coeffs[i]));
    return m;
}

AutocorrResult autocorrelation(std::span<const double> series, int max_lag,
                               AutocorrMethod method) {
    const std::size_t n = series.size();
    if (n < 2) throw std::invalid_argument("autocorrelation needs at least 2 samples");
    if (max_lag < 0 || static_cast<std::size_t>(max_lag) >= n)
        throw std::invalid_argument("max_lag must lie in [0, n)");

    long double mean = 0.0L;
    for (double v : series) mean += v;
    mean /= static_cast<long double>(n);

    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i)
        centered[i] = static_cast<double>(series[i] - mean);

    if (method == AutocorrMethod::automatic)
        method = max_lag <= 256 ? AutocorrMethod::direct : AutocorrMethod::transform;

    AutocorrResult res;
    res.n = n;
    res.sigma_null = 1.0 / std::sqrt(static_cast<double>(n));
    res.lags.resize(static_cast<std::size_t>(max_lag) + 1);
    res.coeffs.resize(static_cast<std::size_t>(max_lag) + 1);
    for (int k = 0; k <= max_lag; ++k) res.lags[static_cast<std::size_t>(k)] = k;

    std::vector<double> raw(static_cast<std::size_t>(max_lag) + 1, 0.0);
    if (method == AutocorrMethod::direct) {
        for (int k = 0; k <= max_lag; ++k) {
            long double acc = 0.0L;
            const auto uk = static_cast<std::size_t>(k);
            for (std::size_t t = 0; t + uk < n; ++t)
                acc += static_cast<long double>(centered[t]) * centered[t + uk];
            raw[uk] = static_cast<double>(acc);
        }
    } else {
        // zero-padded linear correlation via the power spectrum
        std::vector<double> padded(2 * n, 0.0);
        std::copy(centered.begin(), centered.end(), padded.begin());
        auto spec = detail::fft_r2c(padded);
        for (auto& c : spec) c = c * std::conj(c);
        const auto corr = detail::fft_c2r(spec, 2 * n);
        const double scale = 1.0 / (2.0 * static_cast<double>(n));  // FFTW c2r is unnormalized
        for (int k = 0; k <= max_lag; ++k)
            raw[static_cast<std::size_t>(k)] = corr[static_cast<std::size_t>(k)] * scale;
    }
    if (!(raw[0] > 0))
        throw std::runtime_error("undefined correlation: series variance is zero");
    for (int k = 0; k <= max_lag; ++k)
        res.coeffs[static_cast<std::size_t>(k)] = raw[static_cast<std::size_t>(k)] / raw[0];
    return res;
}

AutocorrResult autocorrelation(const BitStream& bits, int max_lag, AutocorrMethod method) {
    std::vector<double> x(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) x[i] = bits.get(i) ? 1.0 : 0.0;
    return autocorrelation(x, max_lag, method);
}

// ---------------------------------------------------------------------------
// battery
// ---------------------------------------------------------------------------

std::vector<TestOutcome> nist_subset(const BitStream& bits, const NistConfig& cfg) {
    const auto e = unpack_bits(bits);
    std::vector<TestOutcome> out;
    out.reserve(8);
    out.push_back(frequency_test(e));
    out.push_back(block_frequency_test(e, cfg.block_frequency_m));
    out.push_back(cumulative_sums_test(e));
    out.push_back(runs_test(e));
    out.push_back(longest_run_test(e));
    out.push_back(spectral_test(e));
    out.push_back(serial_test(e, cfg.serial_m));
    out.push_back(approximate_entropy_test(e, cfg.apen_m));
    return out;
}

Aggregate aggregate(std::span<const double> p_values, double alpha) {
    if (p_values.size() < 10)
        throw std::invalid_argument("aggregation needs at least 10 p-values");
    const auto s = static_cast<double>(p_values.size());
    std::vector<double> sorted(p_values.begin(), p_values.end());
    std::sort(sorted.begin(), sorted.end());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = std::clamp(sorted[i], 0.0, 1.0);
        d = std::max(d, static_cast<double>(i + 1) / s - f);
        d = std::max(d, f - static_cast<double>(i) / s);
    }
    Aggregate agg;
    agg.count = p_values.size();
    const double sq = std::sqrt(s);
    agg.ks_p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
    std::size_t passing = 0;
    for (double p : p_values) passing += p >= alpha;
    agg.proportion = static_cast<double>(passing) / s;
    const double bound = (1.0 - alpha) - 3.0 * std::sqrt(alpha * (1.0 - alpha) / s);
    agg.pass = agg.ks_p >= 1e-4 && agg.proportion >= bound;
    return agg;
}

TestReport run_battery(const BitStream& bits, std::size_t seq_len, const NistConfig& cfg) {
    if (seq_len == 0) throw std::invalid_argument("sequence length must be positive");
    const std::size_t sequences = bits.size() / seq_len;
    if (sequences == 0) throw std::invalid_argument("input shorter than one sequence");

    std::vector<std::vector<TestOutcome>> per_seq(sequences);
    const std::size_t threads = std::min(env_thread_cap(), sequences);
    if (threads <= 1) {
        for (std::size_t s = 0; s < sequences; ++s)
            per_seq[s] = nist_subset(bits.slice(s * seq_len, seq_len), cfg);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::future<void>> workers;
        workers.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            workers.push_back(std::async(std::launch::async, [&] {
                for (std::size_t s = next.fetch_add(1); s < sequences; s = next.fetch_add(1))
                    per_seq[s] = nist_subset(bits.slice(s * seq_len, seq_len), cfg);
            }));
        }
        for (auto& w : workers) w.get();
    }

    TestReport report;
    report.alpha = cfg.alpha;
    report.sequences = sequences;
    report.sequence_bits = seq_len;
    const std::size_t tests = per_seq[0].size();
    const double bound =
        (1.0 - cfg.alpha) - 3.0 * std::sqrt(cfg.alpha * (1.0 - cfg.alpha) /
                                            static_cast<double>(sequences));
    for (std::size_t t = 0; t < tests; ++t) {
        TestRow row;
        row.name = per_seq[0][t].name;
        row.skipped = per_seq[0][t].skipped;
        if (row.skipped) {
            report.rows.push_back(row);
            continue;
        }
        const std::size_t outcomes = per_seq[0][t].p_values.size();
        row.outcomes = outcomes;
        std::vector<double> pooled;
        pooled.reserve(sequences * outcomes);
        double prop_sum = 0.0;
        for (std::size_t o = 0; o < outcomes; ++o) {
            std::size_t passing = 0;
            for (std::size_t s = 0; s < sequences; ++s) {
                const double p = per_seq[s][t].p_values[o];
                pooled.push_back(p);
                passing += p >= cfg.alpha;
            }
            prop_sum += static_cast<double>(passing) / static_cast<double>(sequences);
        }
        row.proportion = prop_sum / static_cast<double>(outcomes);
        if (pooled.size() >= 10) {
            std::vector<double> sorted = pooled;
            std::sort(sorted.begin(), sorted.end());
            double d = 0.0;
            const auto cnt = static_cast<double>(sorted.size());
            for (std::size_t i = 0; i < sorted.size(); ++i) {
                const double f = std::clamp(sorted[i], 0.0, 1.0);
                d = std::max(d, static_cast<double>(i + 1) / cnt - f);
                d = std::max(d, f - static_cast<double>(i) / cnt);
            }
            const double sq = std::sqrt(cnt);
            row.ks_p = kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
        } else {
            // too few sequences for a meaningful uniformity check
            row.ks_p = 1.0;
        }
        row.pass = row.ks_p >= 1e-4 && row.proportion >= bound;
        report.rows.push_back(row);
    }
    for (const auto& row : report.rows)
        if (!row.skipped && !row.pass) ++report.failed_tests;
    report.all_pass = report.failed_tests == 0;
    return report;
}

}  // namespace qrng

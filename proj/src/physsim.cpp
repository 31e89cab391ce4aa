#include "qrng/physsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qrng {

namespace {
// independent Philox streams per noise source
constexpr std::uint64_t kQuantumStream = 1;
constexpr std::uint64_t kClassicalStream = 2;
constexpr std::uint64_t kDetectionStream = 3;
}  // namespace

void SimConfig::validate() const {
    if (power_mw < 0) throw std::invalid_argument("power_mw must be >= 0");
    if (q_coeff < 0 || c_coeff < 0 || a_gain < 0 || f_noise < 0)
        throw std::invalid_argument("noise coefficients must be >= 0");
    if (!(delay_ns > 0)) throw std::invalid_argument("delay_ns must be > 0");
    if (!(sample_rate_gsps > 0)) throw std::invalid_argument("sample_rate_gsps must be > 0");
    if (!(classical_corr_time_ns > delay_ns))
        throw std::invalid_argument("classical_corr_time_ns must exceed delay_ns");
    if (power_mw == 0 && q_coeff > 0)
        throw std::invalid_argument("singular model: quantum variance Q/P diverges at P = 0");
}

double SimConfig::predicted_variance_mv2() const {
    return aq() * power_mw + ac() * power_mw * power_mw + f_noise;
}

double SimConfig::predicted_gamma() const {
    const double other = ac() * power_mw * power_mw + f_noise;
    if (other <= 0) throw std::domain_error("gamma undefined: no classical or detection noise");
    return aq() * power_mw / other;
}

SimConfig SimConfig::from_fitted(double aq, double ac, double f, double power_mw,
                                 double sample_rate_gsps, double phase_var_rad2) {
    if (!(aq >= 0) || !(ac >= 0) || !(f >= 0)) throw std::invalid_argument("negative coefficient");
    if (!(power_mw > 0) || !(phase_var_rad2 > 0))
        throw std::invalid_argument("power and phase variance must be positive");
    SimConfig cfg;
    cfg.power_mw = power_mw;
    cfg.sample_rate_gsps = sample_rate_gsps;
    cfg.f_noise = f;
    const double phase_part = aq * power_mw + ac * power_mw * power_mw;  // A * P^2 * var(dtheta)
    if (phase_part <= 0) {
        cfg.q_coeff = 0;
        cfg.c_coeff = 0;
        cfg.a_gain = 0;
        return cfg;
    }
    cfg.a_gain = phase_part / (power_mw * power_mw * phase_var_rad2);
    cfg.q_coeff = aq / cfg.a_gain;
    cfg.c_coeff = ac / cfg.a_gain;
    return cfg;
}

void AdcConfig::validate() const {
    if (bits != 8) throw std::invalid_argument("only the 8-bit converter is modeled");
    if (!(volts_per_code > 0)) throw std::invalid_argument("volts_per_code must be > 0");
}

AdcConfig AdcConfig::auto_for(const SimConfig& cfg) {
    AdcConfig adc;
    const double sigma = std::sqrt(cfg.predicted_variance_mv2());
    adc.volts_per_code = sigma > 0 ? 8.0 * sigma / 256.0 : 0.1;
    adc.offset_mv = 0.0;
    return adc;
}

std::vector<double> VoltageTrace::voltages() const {
    std::vector<double> v(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) v[i] = voltage(i);
    return v;
}

std::vector<double> simulate_phase_diff(const SimConfig& cfg, std::size_t n) {
    cfg.validate();
    if (n == 0) throw std::invalid_argument("empty input: n must be >= 1");

    std::vector<double> dtheta(n, 0.0);

    if (cfg.q_coeff > 0) {
        // Wiener phase theta(t) with diffusion rate (Q/P)/delay per ns, so
        // Var(theta(t+delay) - theta(t)) = Q/P. Walk a merged event grid:
        // each sample step contributes the increment to t_j + frac (the
        // delayed readout of sample j-k) and on to t_{j+1}.
        const double tau = cfg.sample_interval_ns();
        const double diff_rate = cfg.q_coeff / cfg.power_mw / cfg.delay_ns;  // rad^2 per ns
        const std::size_t k = static_cast<std::size_t>(cfg.delay_ns / tau);
        const double frac = cfg.delay_ns - static_cast<double>(k) * tau;
        const double sig_frac = std::sqrt(diff_rate * frac);
        const double sig_rest = std::sqrt(diff_rate * (tau - frac));
        Philox rng(cfg.rng_seed, kQuantumStream);

        std::vector<double> ring(k + 1, 0.0);
        double theta = 0.0;
        for (std::size_t j = 0; j + 1 <= n + k; ++j) {
            if (j < n) ring[j % (k + 1)] = theta;
            const double theta_delayed = theta + sig_frac * rng.next_gaussian();
            if (j >= k) dtheta[j - k] = theta_delayed - ring[(j - k) % (k + 1)];
            theta = theta_delayed + sig_rest * rng.next_gaussian();
        }
    }

    if (cfg.c_coeff > 0) {
        // stationary Ornstein-Uhlenbeck sampled at the trace rate
        const double rho = std::exp(-cfg.sample_interval_ns() / cfg.classical_corr_time_ns);
        const double innov = std::sqrt(cfg.c_coeff * (1.0 - rho * rho));
        const double sigma = std::sqrt(cfg.c_coeff);
        Philox rng(cfg.rng_seed, kClassicalStream);
        double c = sigma * rng.next_gaussian();
        dtheta[0] += c;
        for (std::size_t i = 1; i < n; ++i) {
            c = rho * c + innov * rng.next_gaussian();
            dtheta[i] += c;
        }
    }

    return dtheta;
}

VoltageTrace simulate_trace(const SimConfig& cfg, const AdcConfig& adc, std::size_t n) {
    adc.validate();
    std::vector<double> dtheta = simulate_phase_diff(cfg, n);  // validates cfg, n

    const double amp = std::sqrt(cfg.a_gain) * cfg.power_mw;
    const double sig_det = std::sqrt(cfg.f_noise);
    Philox det(cfg.rng_seed, kDetectionStream);

    VoltageTrace trace;
    trace.codes.resize(n);
    trace.adc = adc;
    trace.sample_rate_gsps = cfg.sample_rate_gsps;
    trace.origin = "simulated";
    trace.rng_seed = cfg.rng_seed;

    std::size_t clipped = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = cfg.transfer_mode == Transfer::full_sine ? amp * std::sin(dtheta[i])
                                                            : amp * dtheta[i];
        if (cfg.f_noise > 0) v += sig_det * det.next_gaussian();
        const double q = std::round((v - adc.offset_mv) / adc.volts_per_code);
        long code = static_cast<long>(q) + 128;
        if (code < 0) {
            code = 0;
            ++clipped;
        } else if (code > 255) {
            code = 255;
            ++clipped;
        }
        trace.codes[i] = static_cast<std::uint8_t>(code);
    }
    trace.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(n);
    return trace;
}

}  // namespace qrng

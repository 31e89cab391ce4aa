#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrng/rng.hpp"

namespace qrng {

enum class Transfer { full_sine, small_angle };

/// Signal-chain model parameters. The interferometer phase difference
/// Delta-theta(t) = theta(t+dT) - theta(t) carries a quantum part (Wiener
/// phase diffusion, increment variance Q/P over the arm delay) and a
/// classical part (stationary Gaussian, variance C, exponential
/// autocorrelation). The photodetector voltage at quadrature is
/// sqrt(A)*P*sin(dtheta) plus white detection noise of variance F, so the
/// voltage variance decomposes as AQ*P + AC*P^2 + F for small phase.
struct SimConfig {
    double power_mw = 0.9;          // P
    double q_coeff = 0.0036;        // Q, quantum Var(dtheta) = Q/P  [rad^2 mW]
    double c_coeff = 2.296e-4;      // C, classical Var(dtheta)      [rad^2]
    double a_gain = 1724.1;         // A, voltage response           [mV^2/mW^2/rad^2]
    double f_noise = 0.2162;        // F, detection noise            [mV^2]
    double delay_ns = 3.735;        // interferometer arm delay
    double sample_rate_gsps = 10.0;
    double classical_corr_time_ns = 37.35;  // default 10x delay
    Transfer transfer_mode = Transfer::full_sine;
    std::uint64_t rng_seed = 1;

    void validate() const;

    double sample_interval_ns() const { return 1.0 / sample_rate_gsps; }
    double aq() const { return a_gain * q_coeff; }
    double ac() const { return a_gain * c_coeff; }
    /// AQ*P + AC*P^2 + F
    double predicted_variance_mv2() const;
    /// quantum-to-other variance ratio AQ*P / (AC*P^2 + F)
    double predicted_gamma() const;

    /// Builds a config reproducing fitted voltage coefficients (aq, ac, f)
    /// at the given power, splitting them into (Q, C, A) so the total phase
    /// variance at that power equals phase_var_rad2 (small enough for the
    /// quadrature linearization).
    static SimConfig from_fitted(double aq_mv2_per_mw, double ac_mv2_per_mw2, double f_mv2,
                                 double power_mw, double sample_rate_gsps,
                                 double phase_var_rad2 = 0.004);
};

struct AdcConfig {
    int bits = 8;                 // fixed 8-bit converter
    double volts_per_code = 0.1;  // mV per code
    double offset_mv = 0.0;       // voltage at code 128

    void validate() const;
    /// Quantization step such that +-4 sigma of the predicted trace
    /// variance spans the 256-code range.
    static AdcConfig auto_for(const SimConfig& cfg);
};

struct VoltageTrace {
    std::vector<std::uint8_t> codes;
    AdcConfig adc;
    double sample_rate_gsps = 10.0;
    std::string origin = "simulated";  // or "file"
    std::uint64_t rng_seed = 0;        // provenance (0 for file traces)
    double clipped_fraction = 0.0;     // codes clamped at 0/255 during digitization

    std::size_t size() const { return codes.size(); }
    double voltage(std::size_t i) const {
        return (static_cast<int>(codes[i]) - 128) * adc.volts_per_code + adc.offset_mv;
    }
    std::vector<double> voltages() const;
    bool saturated() const { return clipped_fraction > 0.01; }
};

/// Phase differences dtheta(t_i) at t_i = i / sample_rate. Overlapping
/// delay windows (sample interval shorter than the arm delay) come out
/// correlated because consecutive windows share Wiener increments.
std::vector<double> simulate_phase_diff(const SimConfig& cfg, std::size_t n);

/// Full chain: phase -> interferometer transfer -> detection noise -> 8-bit
/// quantization (mid-tread, round half away from zero, clamped).
VoltageTrace simulate_trace(const SimConfig& cfg, const AdcConfig& adc, std::size_t n);

}  // namespace qrng

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrng/rng.hpp"

namespace qrng {

/// Interferometer drift plant. The free-running phase drifts
/// deterministically and diffuses; the actuator phase adds to it. Port
/// powers follow the two-beam transfer: OUT1 = P(1 + V cos phi)/2 and the
/// complementary OUT2, each read through a relative-noise power meter.
struct PlantConfig {
    double drift_rate_rad_per_s = 0.005;
    double drift_noise_rad2_per_s = 1e-6;
    double fringe_visibility = 1.0;
    double input_power_mw = 1.0;
    double meter_noise_rel = 1e-3;
    double meter_rate_hz = 10.0;
    double actuator_range_rad = 60.0;
    double actuator_slew_rad_per_s = 20.0;
    double initial_phase_rad = 1.5707963267948966;  // start at quadrature
    std::uint64_t rng_seed = 1;

    void validate() const;
};

/// Discrete PID with anti-windup clamping on the integral term. The
/// setpoint is the OUT1 power fraction (0.5 = quadrature).
struct PidGains {
    double kp = 0.4;
    double ki = 2.4;  // 1/s
    double kd = 0.0;
    double integral_clamp = 10.0;
    double setpoint = 0.5;

    void validate() const;
};

struct PlantState {
    double free_phase_rad = 0.0;  // drift accumulator, excludes the actuator
    double actuator_rad = 0.0;
    double t_s = 0.0;

    double total_phase() const { return free_phase_rad + actuator_rad; }
};

struct PortReadout {
    double out1_mw = 0.0;
    double out2_mw = 0.0;
};

/// Advances the plant by dt: drift + diffusion, slew-limited actuator move
/// toward the commanded phase, then the meter readout.
PortReadout step_plant(const PlantConfig& cfg, PlantState& state, double control_phase_rad,
                       double dt_s, Philox& rng);

struct StabilityTrace {
    std::vector<double> t_s;
    std::vector<double> out1_mw;
    std::vector<double> phi_rad;      // total interferometer phase
    std::vector<double> control_rad;  // commanded actuator phase
    double rms_deviation_fraction = 0.0;  // RMS of out1/P - setpoint
    std::size_t wrap_events = 0;
    std::vector<std::string> events;  // actuator wrap log
};

/// Runs the meter-rate control loop for duration_s. Requires at least 10
/// control steps. Actuator saturation wraps by 2*pi and is logged.
StabilityTrace run_closed_loop(const PlantConfig& cfg, const PidGains& gains, double duration_s);

/// Same loop with the controller disconnected; identical RNG consumption,
/// so a zero-gain closed loop reproduces it exactly.
StabilityTrace run_open_loop(const PlantConfig& cfg, double duration_s);

}  // namespace qrng

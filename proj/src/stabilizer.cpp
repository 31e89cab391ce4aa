#include "qrng/stabilizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qrng {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void PlantConfig::validate() const {
    if (drift_noise_rad2_per_s < 0 || meter_noise_rel < 0)
        throw std::invalid_argument("noise intensities must be >= 0");
    if (fringe_visibility < 0 || fringe_visibility > 1)
        throw std::invalid_argument("fringe_visibility must lie in [0, 1]");
    if (input_power_mw < 0) throw std::invalid_argument("input power must be >= 0");
    if (!(meter_rate_hz > 0)) throw std::invalid_argument("meter_rate_hz must be > 0");
    if (!(actuator_range_rad > 0) || actuator_slew_rad_per_s < 0)
        throw std::invalid_argument("actuator limits must be positive");
}

void PidGains::validate() const {
    if (kp < 0 || ki < 0 || kd < 0) throw std::invalid_argument("gains must be >= 0");
    if (!(integral_clamp > 0)) throw std::invalid_argument("integral clamp must be > 0");
}

PortReadout step_plant(const PlantConfig& cfg, PlantState& state, double control_phase_rad,
                       double dt_s, Philox& rng) {
    if (!(dt_s > 0)) throw std::invalid_argument("dt must be > 0");
    state.free_phase_rad += cfg.drift_rate_rad_per_s * dt_s;
    if (cfg.drift_noise_rad2_per_s > 0)
        state.free_phase_rad += std::sqrt(cfg.drift_noise_rad2_per_s * dt_s) * rng.next_gaussian();
    else
        rng.next_gaussian();  // keep the draw sequence independent of the noise setting

    const double max_move = cfg.actuator_slew_rad_per_s * dt_s;
    const double want = control_phase_rad - state.actuator_rad;
    state.actuator_rad += std::clamp(want, -max_move, max_move);
    state.t_s += dt_s;

    const double phi = state.total_phase();
    PortReadout out;
    out.out1_mw = cfg.input_power_mw * (1.0 + cfg.fringe_visibility * std::cos(phi)) / 2.0;
    out.out2_mw = cfg.input_power_mw - out.out1_mw;  // complementary port
    if (cfg.meter_noise_rel > 0) {
        out.out1_mw *= 1.0 + cfg.meter_noise_rel * rng.next_gaussian();
        out.out2_mw *= 1.0 + cfg.meter_noise_rel * rng.next_gaussian();
    } else {
        rng.next_gaussian();
        rng.next_gaussian();
    }
    return out;
}

namespace {

StabilityTrace run_loop(const PlantConfig& cfg, const PidGains* gains, double duration_s) {
    cfg.validate();
    if (gains) gains->validate();
    if (!(duration_s > 0)) throw std::invalid_argument("duration must be > 0");
    const double dt = 1.0 / cfg.meter_rate_hz;
    const auto steps = static_cast<std::size_t>(std::floor(duration_s * cfg.meter_rate_hz));
    if (steps < 10) throw std::invalid_argument("duration gives fewer than 10 control steps");

    Philox rng(cfg.rng_seed, 7);
    PlantState state;
    state.free_phase_rad = cfg.initial_phase_rad;

    StabilityTrace trace;
    trace.t_s.reserve(steps);
    trace.out1_mw.reserve(steps);
    trace.phi_rad.reserve(steps);
    trace.control_rad.reserve(steps);

    const double setpoint = gains ? gains->setpoint : 0.5;
    double integral = 0.0;
    double prev_err = 0.0;
    bool have_prev = false;
    double command = 0.0;
    double sum_sq = 0.0;

    for (std::size_t k = 0; k < steps; ++k) {
        const auto ports = step_plant(cfg, state, command, dt, rng);
        const double fraction =
            cfg.input_power_mw > 0 ? ports.out1_mw / cfg.input_power_mw : 0.0;
        const double err = setpoint - fraction;
        sum_sq += err * err;

        if (gains) {
            integral = std::clamp(integral + err * dt, -gains->integral_clamp,
                                  gains->integral_clamp);
            const double deriv = have_prev ? (err - prev_err) / dt : 0.0;
            const double u = gains->kp * err + gains->ki * integral + gains->kd * deriv;
            prev_err = err;
            have_prev = true;
            // OUT1 rises with decreasing phase above quadrature: drive opposite
            command = -u;
        }

        if (std::fabs(state.actuator_rad) > cfg.actuator_range_rad) {
            const double shift = state.actuator_rad > 0 ? -kTwoPi : kTwoPi;
            state.actuator_rad += shift;
            command += shift;
            ++trace.wrap_events;
            trace.events.push_back("actuator wrap by 2*pi at t=" + std::to_string(state.t_s));
        }

        trace.t_s.push_back(state.t_s);
        trace.out1_mw.push_back(ports.out1_mw);
        trace.phi_rad.push_back(state.total_phase());
        trace.control_rad.push_back(command);
    }
    trace.rms_deviation_fraction = std::sqrt(sum_sq / static_cast<double>(steps));
    return trace;
}

}  // namespace

StabilityTrace run_closed_loop(const PlantConfig& cfg, const PidGains& gains, double duration_s) {
    return run_loop(cfg, &gains, duration_s);
}

StabilityTrace run_open_loop(const PlantConfig& cfg, double duration_s) {
    return run_loop(cfg, nullptr, duration_s);
}

}  // namespace qrng

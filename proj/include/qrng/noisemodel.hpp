#pragma once

#include <vector>

namespace qrng {

/// One measured point of the variance-vs-power curve.
struct VariancePoint {
    double power_mw = 0.0;
    double variance_mv2 = 0.0;
    std::size_t n_samples = 0;
};

/// Fitted coefficients of v(P) = AQ*P + AC*P^2 + F.
struct NoiseModelParams {
    double aq = 0.0;  // mV^2/mW
    double ac = 0.0;  // mV^2/mW^2
    double f = 0.0;   // mV^2
    double r_squared = 0.0;

    double predict(double power_mw) const {
        return aq * power_mw + ac * power_mw * power_mw + f;
    }
};

/// Least squares on the basis {P, P^2, 1}; nonnegativity enforced by
/// clipping negative coefficients and refitting on the remaining active
/// set. Needs >= 4 points over >= 3 distinct powers.
NoiseModelParams fit_variance_model(const std::vector<VariancePoint>& points);

/// gamma(P) = AQ*P / (AC*P^2 + F)
double gamma_from_fit(const NoiseModelParams& params, double power_mw);

/// Direct-measurement path: gamma = (total - classical) / classical.
/// This is the value the entropy accounting uses.
double gamma_from_measurement(double total_var_mv2, double classical_var_mv2);

struct OptimalPower {
    double p_star_mw = 0.0;
    double gamma_star = 0.0;
};

/// Maximizer of gamma(P): P* = sqrt(F/AC), gamma* = AQ / (2 sqrt(AC*F)).
OptimalPower optimal_power(const NoiseModelParams& params);

}  // namespace qrng

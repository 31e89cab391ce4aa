#include "qrng/noisemodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <stdexcept>

namespace qrng {

namespace {

// Solves the 3x3 normal equations restricted to the active basis functions
// (P, P^2, 1). `active[i]` false pins coefficient i to zero.
std::array<double, 3> solve_active(const std::vector<VariancePoint>& pts,
                                   const std::array<bool, 3>& active) {
    // normal matrix in long double: powers up to P^4 over a decade of P
    long double m[3][3] = {};
    long double rhs[3] = {};
    for (const auto& p : pts) {
        const long double basis[3] = {p.power_mw, static_cast<long double>(p.power_mw) * p.power_mw,
                                      1.0L};
        for (int i = 0; i < 3; ++i) {
            if (!active[static_cast<std::size_t>(i)]) continue;
            for (int j = 0; j < 3; ++j)
                if (active[static_cast<std::size_t>(j)]) m[i][j] += basis[i] * basis[j];
            rhs[i] += basis[i] * p.variance_mv2;
        }
    }
    for (int i = 0; i < 3; ++i)
        if (!active[static_cast<std::size_t>(i)]) m[i][i] = 1.0L;  // decoupled row

    // Gaussian elimination with partial pivoting
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(static_cast<double>(m[perm[r]][col])) >
                std::fabs(static_cast<double>(m[perm[piv]][col])))
                piv = r;
        std::swap(perm[col], perm[piv]);
        const long double d = m[perm[col]][col];
        if (std::fabs(static_cast<double>(d)) < 1e-30)
            throw std::runtime_error("degenerate fit: design matrix is rank-deficient");
        for (int r = col + 1; r < 3; ++r) {
            const long double fac = m[perm[r]][col] / d;
            for (int c = col; c < 3; ++c) m[perm[r]][c] -= fac * m[perm[col]][c];
            rhs[perm[r]] -= fac * rhs[perm[col]];
        }
    }
    std::array<double, 3> x{};
    for (int col = 2; col >= 0; --col) {
        long double acc = rhs[perm[col]];
        for (int c = col + 1; c < 3; ++c) acc -= m[perm[col]][c] * x[static_cast<std::size_t>(c)];
        x[static_cast<std::size_t>(col)] = static_cast<double>(acc / m[perm[col]][col]);
    }
    for (int i = 0; i < 3; ++i)
        if (!active[static_cast<std::size_t>(i)]) x[static_cast<std::size_t>(i)] = 0.0;
    return x;
}

}  // namespace

NoiseModelParams fit_variance_model(const std::vector<VariancePoint>& points) {
    if (points.size() < 4)
        throw std::invalid_argument("fit needs at least 4 variance points");
    std::set<double> distinct;
    for (const auto& p : points) {
        if (p.power_mw < 0 || p.variance_mv2 < 0)
            throw std::invalid_argument("variance points must be nonnegative");
        distinct.insert(p.power_mw);
    }
    if (distinct.size() < 3)
        throw std::runtime_error("degenerate fit: need at least 3 distinct powers");

    std::array<bool, 3> active = {true, true, true};
    std::array<double, 3> x{};
    // active-set clipping: at most 3 rounds since each drops one coefficient
    for (int round = 0; round < 3; ++round) {
        x = solve_active(points, active);
        int worst = -1;
        double most_negative = -1e-12;
        for (int i = 0; i < 3; ++i) {
            if (active[static_cast<std::size_t>(i)] &&
                x[static_cast<std::size_t>(i)] < most_negative) {
                most_negative = x[static_cast<std::size_t>(i)];
                worst = i;
            }
        }
        if (worst < 0) break;
        active[static_cast<std::size_t>(worst)] = false;
    }
    for (double& v : x) v = std::max(v, 0.0);

    NoiseModelParams params{x[0], x[1], x[2], 0.0};

    long double ss_res = 0.0L, ss_tot = 0.0L, mean = 0.0L;
    for (const auto& p : points) mean += p.variance_mv2;
    mean /= static_cast<long double>(points.size());
    for (const auto& p : points) {
        const long double r = p.variance_mv2 - params.predict(p.power_mw);
        const long double d = p.variance_mv2 - mean;
        ss_res += r * r;
        ss_tot += d * d;
    }
    params.r_squared =
        ss_tot > 0 ? std::clamp(static_cast<double>(1.0L - ss_res / ss_tot), 0.0, 1.0) : 1.0;
    return params;
}

double gamma_from_fit(const NoiseModelParams& params, double power_mw) {
    if (!(power_mw > 0)) throw std::invalid_argument("power must be > 0");
    const double denom = params.ac * power_mw * power_mw + params.f;
    if (denom <= 0) throw std::runtime_error("infinite ratio: AC and F are both zero");
    return params.aq * power_mw / denom;
}

double gamma_from_measurement(double total_var_mv2, double classical_var_mv2) {
    if (classical_var_mv2 <= 0)
        throw std::runtime_error("infinite ratio: classical variance must be > 0");
    if (classical_var_mv2 > total_var_mv2)
        throw std::runtime_error("inconsistent measurement: classical variance exceeds total");
    return (total_var_mv2 - classical_var_mv2) / classical_var_mv2;
}

OptimalPower optimal_power(const NoiseModelParams& params) {
    if (!(params.aq > 0)) throw std::runtime_error("unbounded optimum: AQ must be > 0");
    if (!(params.ac > 0) || !(params.f > 0))
        throw std::runtime_error("unbounded optimum: gamma is monotone when AC or F is zero");
    OptimalPower opt;
    opt.p_star_mw = std::sqrt(params.f / params.ac);
    opt.gamma_star = params.aq / (2.0 * std::sqrt(params.ac * params.f));
    return opt;
}

}  // namespace qrng

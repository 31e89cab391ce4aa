#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "qrng/noisemodel.hpp"

using namespace qrng;

namespace {

std::vector<VariancePoint> synth_points(double aq, double ac, double f,
                                        const std::vector<double>& powers) {
    std::vector<VariancePoint> pts;
    for (double p : powers) pts.push_back({p, aq * p + ac * p * p + f, 1000000});
    return pts;
}

const std::vector<double> kPowers = {0.1, 0.3, 0.5, 0.9, 1.5, 2.0, 3.0, 4.0,
                                     5.0, 6.0, 7.0, 8.0, 9.0, 10.0};

// independent optimum oracle: coarse grid then golden-section refinement
double grid_golden_argmax_gamma(const NoiseModelParams& params) {
    double best_p = 1e-4, best_g = -1.0;
    for (double p = 1e-4; p <= 12.0; p += 1e-4) {
        const double g = params.aq * p / (params.ac * p * p + params.f);
        if (g > best_g) {
            best_g = g;
            best_p = p;
        }
    }
    double lo = std::max(1e-6, best_p - 2e-4), hi = best_p + 2e-4;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    auto gamma_at = [&](double p) { return params.aq * p / (params.ac * p * p + params.f); };
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    for (int it = 0; it < 200; ++it) {
        if (gamma_at(x1) < gamma_at(x2)) {
            lo = x1;
            x1 = x2;
            x2 = lo + phi * (hi - lo);
        } else {
            hi = x2;
            x2 = x1;
            x1 = hi - phi * (hi - lo);
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("noiseless synthetic points are recovered exactly") {
    const auto pts = synth_points(6.2068, 0.3958, 0.2162, kPowers);
    const auto fit = fit_variance_model(pts);
    CHECK(fit.aq == doctest::Approx(6.2068).epsilon(1e-9));
    CHECK(fit.ac == doctest::Approx(0.3958).epsilon(1e-9));
    CHECK(fit.f == doctest::Approx(0.2162).epsilon(1e-9));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constant variance collapses onto the intercept") {
    const auto fit = fit_variance_model(synth_points(0.0, 0.0, 0.5, {1.0, 2.0, 3.0, 4.0}));
    CHECK(fit.aq == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.ac == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.f == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("nonnegativity is enforced by clip-and-refit") {
    // data from a decreasing line would want AQ < 0
    std::vector<VariancePoint> pts = {{1.0, 1.0, 0}, {2.0, 0.8, 0}, {3.0, 0.6, 0}, {4.0, 0.5, 0}};
    const auto fit = fit_variance_model(pts);
    CHECK(fit.aq >= 0.0);
    CHECK(fit.ac >= 0.0);
    CHECK(fit.f >= 0.0);
    CHECK(fit.r_squared >= 0.0);
    CHECK(fit.r_squared <= 1.0);
}

TEST_CASE("fit idempotence") {
    const auto first = fit_variance_model(synth_points(5.8581, 0.4563, 0.2052, kPowers));
    const auto again = fit_variance_model(synth_points(first.aq, first.ac, first.f, kPowers));
    CHECK(again.aq == doctest::Approx(first.aq).epsilon(1e-9));
    CHECK(again.ac == doctest::Approx(first.ac).epsilon(1e-9));
    CHECK(again.f == doctest::Approx(first.f).epsilon(1e-9));
}

TEST_CASE("scale equivariance") {
    const double c = 3.7;
    auto pts = synth_points(6.0569, 0.4279, 0.22, kPowers);
    const auto base = fit_variance_model(pts);
    for (auto& p : pts) p.variance_mv2 *= c;
    const auto scaled = fit_variance_model(pts);
    CHECK(scaled.aq == doctest::Approx(c * base.aq).epsilon(1e-9));
    CHECK(scaled.ac == doctest::Approx(c * base.ac).epsilon(1e-9));
    CHECK(scaled.f == doctest::Approx(c * base.f).epsilon(1e-9));
    CHECK(gamma_from_fit(scaled, 0.9) == doctest::Approx(gamma_from_fit(base, 0.9)).epsilon(1e-12));
    CHECK(optimal_power(scaled).p_star_mw ==
          doctest::Approx(optimal_power(base).p_star_mw).epsilon(1e-12));
}

TEST_CASE("degenerate designs are rejected") {
    CHECK_THROWS_AS((void)fit_variance_model(synth_points(1, 0, 0, {1.0, 2.0, 3.0})),
                    std::invalid_argument);  // too few points
    std::vector<VariancePoint> two_powers = {{1.0, 2.0, 0}, {1.0, 2.1, 0}, {2.0, 3.0, 0},
                                             {2.0, 3.1, 0}};
    CHECK_THROWS_AS((void)fit_variance_model(two_powers), std::runtime_error);
}

TEST_CASE("gamma from the fitted model") {
    const NoiseModelParams table1{6.2068, 0.3958, 0.2162, 1.0};
    // AQ*P / (AC*P^2 + F) = 5.58612 / 0.536798
    CHECK(gamma_from_fit(table1, 0.9) == doctest::Approx(10.4064).epsilon(1e-4));
    CHECK(gamma_from_fit(table1, 0.9) == doctest::Approx(10.41).epsilon(1e-3));
    const NoiseModelParams no_quantum{0.0, 0.3958, 0.2162, 1.0};
    CHECK(gamma_from_fit(no_quantum, 0.9) == 0.0);
    CHECK(gamma_from_fit(table1, 1e-9) < 1e-6);  // gamma -> 0 as P -> 0
    CHECK_THROWS_AS((void)gamma_from_fit({1.0, 0.0, 0.0, 1.0}, 1.0), std::runtime_error);
    CHECK_THROWS_AS((void)gamma_from_fit(table1, 0.0), std::invalid_argument);
}

TEST_CASE("gamma from direct measurement") {
    // paper operating point: total 5.24 mV^2, classical share 5.24/6.46
    CHECK(gamma_from_measurement(5.24, 5.24 / 6.46) == doctest::Approx(5.46).epsilon(1e-12));
    CHECK(gamma_from_measurement(3.0, 3.0) == 0.0);
    CHECK(gamma_from_measurement(4.0, 2.0) == 1.0);
    CHECK_THROWS_AS((void)gamma_from_measurement(2.0, 3.0), std::runtime_error);
    CHECK_THROWS_AS((void)gamma_from_measurement(2.0, 0.0), std::runtime_error);
}

TEST_CASE("measurement round-trip identity") {
    for (const double g : {0.1, 1.0, 5.46, 42.0}) {
        const double total = 5.24;
        CHECK(gamma_from_measurement(total, total / (g + 1.0)) ==
              doctest::Approx(g).epsilon(1e-12));
    }
}

TEST_CASE("optimal power: closed form against the numeric oracle") {
    const NoiseModelParams cols[] = {
        {6.0142, 0.4201, 0.1714, 1.0},  // 1 GSa/s
        {5.8581, 0.4563, 0.2052, 1.0},  // 2 GSa/s
        {6.0569, 0.4279, 0.2200, 1.0},  // 5 GSa/s
        {6.2068, 0.3958, 0.2162, 1.0},  // 10 GSa/s
    };
    for (const auto& params : cols) {
        const auto opt = optimal_power(params);
        const double numeric = grid_golden_argmax_gamma(params);
        CHECK(std::fabs(opt.p_star_mw - numeric) / numeric < 1e-6);
        CHECK(gamma_from_fit(params, opt.p_star_mw) ==
              doctest::Approx(opt.gamma_star).epsilon(1e-12));
    }
    const auto opt10 = optimal_power(cols[3]);
    CHECK(opt10.p_star_mw == doctest::Approx(0.7391).epsilon(2e-4));
    CHECK(opt10.gamma_star == doctest::Approx(10.61).epsilon(1e-3));
    const auto opt1 = optimal_power(cols[0]);
    CHECK(opt1.p_star_mw == doctest::Approx(0.6388).epsilon(2e-4));
    CHECK(opt1.gamma_star == doctest::Approx(11.20).epsilon(1e-3));
}

TEST_CASE("symmetric coefficients optimum") {
    const auto opt = optimal_power({2.0, 1.0, 1.0, 1.0});
    CHECK(opt.p_star_mw == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(opt.gamma_star == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("unbounded optimum cases throw") {
    CHECK_THROWS_AS((void)optimal_power({1.0, 0.0, 1.0, 1.0}), std::runtime_error);
    CHECK_THROWS_AS((void)optimal_power({1.0, 1.0, 0.0, 1.0}), std::runtime_error);
    CHECK_THROWS_AS((void)optimal_power({0.0, 1.0, 1.0, 1.0}), std::runtime_error);
}

TEST_CASE("gamma is unimodal around the optimum") {
    const NoiseModelParams params{6.2068, 0.3958, 0.2162, 1.0};
    const double p_star = optimal_power(params).p_star_mw;
    double prev = gamma_from_fit(params, p_star / 50.0);
    for (double p = p_star / 25.0; p < p_star; p += p_star / 50.0) {
        const double g = gamma_from_fit(params, p);
        CHECK(g > prev);
        prev = g;
    }
    prev = gamma_from_fit(params, p_star);
    for (double p = p_star * 1.1; p < 12.0; p += p_star / 10.0) {
        const double g = gamma_from_fit(params, p);
        CHECK(g < prev);
        prev = g;
    }
}

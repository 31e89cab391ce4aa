#pragma once

// Statistical special functions used by the test battery.

namespace qrng::detail {

// Regularized upper incomplete gamma function Q(a, x).
double igamc(double a, double x);

// Standard normal CDF.
double normal_cdf(double z);

// Kolmogorov distribution survival function Q_KS(lambda).
double kolmogorov_q(double lambda);

}  // namespace qrng::detail

#pragma once

#include <complex>
#include <span>
#include <vector>

namespace qrng::detail {

// Out-of-place real-to-complex DFT (half spectrum, n/2+1 bins). FFTW
// planning is serialized internally; execution is safe to run concurrently.
std::vector<std::complex<double>> fft_r2c(std::span<const double> in);

// Inverse of fft_r2c, unnormalized (scaled by n like FFTW's c2r).
std::vector<double> fft_c2r(std::span<const std::complex<double>> in, std::size_t n);

}  // namespace qrng::detail

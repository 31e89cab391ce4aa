#include "fft_util.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

namespace qrng::detail {

namespace {
std::mutex g_plan_mutex;  // FFTW planning is not reentrant
}

std::vector<std::complex<double>> fft_r2c(std::span<const double> in) {
    const std::size_t n = in.size();
    std::vector<double> buf(in.begin(), in.end());
    std::vector<std::complex<double>> out(n / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard lock(g_plan_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), buf.data(),
                                    reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(g_plan_mutex);
        fftw_destroy_plan(plan);
    }
    return out;
}

std::vector<double> fft_c2r(std::span<const std::complex<double>> in, std::size_t n) {
    std::vector<std::complex<double>> buf(in.begin(), in.end());
    std::vector<double> out(n);
    fftw_plan plan;
    {
        std::lock_guard lock(g_plan_mutex);
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(n),
                                    reinterpret_cast<fftw_complex*>(buf.data()), out.data(),
                                    FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(g_plan_mutex);
        fftw_destroy_plan(plan);
    }
    return out;
}

}  // namespace qrng::detail

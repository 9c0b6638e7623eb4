#include "fft.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <new>

namespace specpc::detail {

namespace {
// The FFTW planner is not thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

DftPlan::DftPlan(int n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    real_buf_ = fftw_alloc_real(static_cast<size_t>(n));
    half_buf_ = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
    in_buf_ = fftw_alloc_complex(static_cast<size_t>(n));
    out_buf_ = fftw_alloc_complex(static_cast<size_t>(n));
    if (!real_buf_ || !half_buf_ || !in_buf_ || !out_buf_) throw std::bad_alloc();
    r2c_ = fftw_plan_dft_r2c_1d(n, real_buf_, half_buf_, FFTW_ESTIMATE);
    c2c_back_ = fftw_plan_dft_1d(n, in_buf_, out_buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
}

DftPlan::~DftPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(r2c_);
    fftw_destroy_plan(c2c_back_);
    fftw_free(real_buf_);
    fftw_free(half_buf_);
    fftw_free(in_buf_);
    fftw_free(out_buf_);
}

void DftPlan::forward_real(std::span<const double> in, std::span<std::complex<double>> out) {
    std::copy(in.begin(), in.end(), real_buf_);
    fftw_execute(r2c_);
    const int half = n_ / 2;
    for (int j = 0; j <= half; ++j) out[static_cast<size_t>(j)] = {half_buf_[j][0], half_buf_[j][1]};
    for (int j = half + 1; j < n_; ++j)
        out[static_cast<size_t>(j)] = std::conj(out[static_cast<size_t>(n_ - j)]);
}

void DftPlan::backward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
    std::memcpy(in_buf_, in.data(), sizeof(fftw_complex) * static_cast<size_t>(n_));
    fftw_execute(c2c_back_);
    std::memcpy(out.data(), out_buf_, sizeof(fftw_complex) * static_cast<size_t>(n_));
}

}  // namespace specpc::detail

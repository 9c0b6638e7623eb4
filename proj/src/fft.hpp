#pragma once

#include <complex>
#include <span>

#include <fftw3.h>

namespace specpc::detail {

// Length-n discrete Fourier transforms backed by FFTW. Transforms are
// unnormalized:
//   forward:  out[j] = sum_t in[t] exp(-2 pi i j t / n)
//   backward: out[t] = sum_j in[j] exp(+2 pi i j t / n)
class DftPlan {
public:
    explicit DftPlan(int n);
    ~DftPlan();
    DftPlan(const DftPlan&) = delete;
    DftPlan& operator=(const DftPlan&) = delete;

    int size() const { return n_; }

    // Full-length spectrum of real input; the upper half is filled by
    // conjugate mirroring so out[n-j] == conj(out[j]) holds exactly.
    void forward_real(std::span<const double> in, std::span<std::complex<double>> out);
    void backward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);

private:
    int n_;
    double* real_buf_;
    fftw_complex* half_buf_;
    fftw_complex* in_buf_;
    fftw_complex* out_buf_;
    fftw_plan r2c_;
    fftw_plan c2c_back_;
};

}  // namespace specpc::detail

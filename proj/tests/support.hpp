#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace specpc::testing {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = n(rng);
    return m;
}

// textbook O(T^2) DFT, t = 0..T-1, scaled by 1/sqrt(T)
inline Eigen::MatrixXcd direct_dft(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n, x.cols());
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index t = 0; t < n; ++t) {
            const double a = -two_pi * static_cast<double>((j * t) % n) / static_cast<double>(n);
            d.row(j) += std::complex<double>(std::cos(a), std::sin(a)) * x.row(t).cast<std::complex<double>>();
        }
    return d / std::sqrt(static_cast<double>(n));
}

inline double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace specpc::testing

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "specpc/series.hpp"

namespace specpc {

/// Fourier coefficients d(w_j) = T^{-1/2} sum_t X(t) exp(-2 pi i w_j t) of the
/// mean-centered series on the grid w_j = j / T, j = 0..T-1.
struct FourierCoefficients {
    Eigen::MatrixXcd coeffs;  // J x p
    Eigen::VectorXd freqs;    // cycles per sample

    Eigen::Index frequencies() const { return coeffs.rows(); }
    Eigen::Index channels() const { return coeffs.cols(); }
};

/// One Hermitian p x p spectral matrix per Fourier frequency.
struct SpectralDensityField {
    std::vector<Eigen::MatrixXcd> matrices;
    Eigen::VectorXd freqs;
    int smoothing_span = 1;

    Eigen::Index frequencies() const { return static_cast<Eigen::Index>(matrices.size()); }
    Eigen::Index channels() const { return matrices.empty() ? 0 : matrices.front().rows(); }
};

/// Leading eigenpairs of a spectral field, frequency by frequency.
///
/// `eigenvalues(j, l)` is the l-th largest eigenvalue at frequency j and
/// `eigenvectors[j].col(l)` its unit-norm eigenvector with the phase fixed so
/// that the first coordinate of modulus above 1e-9 is real and nonnegative.
/// `total_variance(j)` is the sum of all p eigenvalues (the trace).
struct FrequencyEigenStructure {
    Eigen::MatrixXd eigenvalues;                // J x q
    std::vector<Eigen::MatrixXcd> eigenvectors;  // J entries, each p x q
    Eigen::VectorXd total_variance;             // J
    Eigen::VectorXd freqs;

    Eigen::Index frequencies() const { return eigenvalues.rows(); }
    Eigen::Index components() const { return eigenvalues.cols(); }
};

FourierCoefficients fourier_coefficients(const MultichannelSeries& series);

/// Rank-one periodogram matrices I(w_j) = d(w_j) d(w_j)^*.
SpectralDensityField periodogram_field(const FourierCoefficients& coeffs);

/// Flat Daniell smoothing over `span` adjacent frequencies, wrapping around
/// the frequency circle. The result is symmetrized to be exactly Hermitian.
SpectralDensityField smooth_field(const SpectralDensityField& field, int span);

/// Circular flat moving average of a real sequence (scalar Daniell kernel).
Eigen::VectorXd smooth_circular(const Eigen::VectorXd& values, int span);

/// Top-q eigenpairs per frequency. Frequencies j <= J/2 are solved and the
/// rest are reflected as conjugates, so the result is conjugate-symmetric.
FrequencyEigenStructure eigen_field(const SpectralDensityField& field, int q);

/// Same result as eigen_field(smooth_field(periodogram_field(coeffs), span), q)
/// without forming the p x p matrices. The smoothed periodogram at w_j is
/// D D^* / span with D the p x span window of coefficients, so its nonzero
/// eigenpairs follow from the span x span Gram matrix D^* D / span.
/// Frequencies where the factored route is degenerate fall back to a full
/// Hermitian solve.
FrequencyEigenStructure smoothed_eigen_structure(const FourierCoefficients& coeffs, int span, int q);

/// Multiplies `v` by a unit phase so its first coordinate with modulus
/// above 1e-9 becomes real and nonnegative.
void normalize_phase(Eigen::Ref<Eigen::VectorXcd> v);

}  // namespace specpc

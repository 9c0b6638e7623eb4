#include "specpc/fourier.hpp"

#include <cmath>
#include <complex>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>

#include "fft.hpp"
#include "specpc/error.hpp"

namespace specpc {

namespace {

constexpr double kPhaseModulusFloor = 1e-9;
constexpr double kPsdRelativeTolerance = 1e-8;
constexpr double kConjugateSymmetryTolerance = 1e-8;

Eigen::VectorXd frequency_grid(Eigen::Index n) {
    return Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) / static_cast<double>(n);
}

void check_span(int span, Eigen::Index n) {
    if (span < 1 || span % 2 == 0)
        throw ValidationError("smoothing span must be a positive odd integer, got " +
                              std::to_string(span));
    if (span > n)
        throw ValidationError("smoothing span " + std::to_string(span) + " exceeds " +
                              std::to_string(n) + " frequencies");
}

struct EigenPairs {
    Eigen::VectorXd values;   // q, descending
    Eigen::MatrixXcd vectors;  // p x q
    double total = 0.0;
};

// Clips eigenvalues in [-tol * largest, 0) to zero; anything lower means the
// matrix was not positive semidefinite.
double repaired(double value, double largest, Eigen::Index j) {
    if (value >= 0.0) return value;
    if (value >= -kPsdRelativeTolerance * std::max(largest, 0.0)) return 0.0;
    throw ValidationError("spectral matrix at frequency index " + std::to_string(j) +
                          " is not positive semidefinite (eigenvalue " + std::to_string(value) +
                          ")");
}

template <typename Matrix>
EigenPairs solve_selfadjoint(const Matrix& m, int q, Eigen::Index j) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigensolver did not converge at frequency index " + std::to_string(j));
    const Eigen::VectorXd& ascending = solver.eigenvalues();
    const Eigen::Index p = ascending.size();
    const double largest = ascending.cwiseAbs().maxCoeff();

    EigenPairs out;
    out.values.resize(q);
    out.vectors.resize(p, q);
    for (Eigen::Index i = 0; i < p; ++i) out.total += repaired(ascending(i), largest, j);
    for (int l = 0; l < q; ++l) {
        out.values(l) = repaired(ascending(p - 1 - l), largest, j);
        out.vectors.col(l) = solver.eigenvectors().col(p - 1 - l).template cast<std::complex<double>>();
        normalize_phase(out.vectors.col(l));
    }
    return out;
}

// At j = 0 and j = n/2 the matrix is its own conjugate, so the eigenvectors
// must be real too. A complex solver gives no such guarantee inside
// degenerate (e.g. null) eigenspaces.
template <typename Matrix>
std::optional<EigenPairs> factored_solve(const Matrix& window, int q, Eigen::Index j) {
    const Eigen::Index span = window.cols();
    const Matrix gram = window.adjoint() * window;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigensolver did not converge at frequency index " + std::to_string(j));
    const Eigen::VectorXd& ascending = solver.eigenvalues();
    const double largest = ascending(span - 1);
    // Vectors for (near-)null eigenvalues are not recoverable from D w.
    if (!(largest > 0.0 && ascending(span - q) > 1e-10 * largest)) return std::nullopt;
    EigenPairs pairs;
    pairs.values.resize(q);
    pairs.vectors.resize(window.rows(), q);
    pairs.total = window.squaredNorm();
    for (int l = 0; l < q; ++l) {
        pairs.values(l) = ascending(span - 1 - l);
        Eigen::VectorXcd v = (window * solver.eigenvectors().col(span - 1 - l)).template cast<std::complex<double>>();
        v /= v.norm();
        normalize_phase(v);
        pairs.vectors.col(l) = v;
    }
    return pairs;
}

EigenPairs solve_hermitian(const Eigen::MatrixXcd& m, int q, Eigen::Index j, Eigen::Index n) {
    if (j == 0 || 2 * j == n) return solve_selfadjoint<Eigen::MatrixXd>(m.real(), q, j);
    return solve_selfadjoint<Eigen::MatrixXcd>(m, q, j);
}

void store(FrequencyEigenStructure& eigs, Eigen::Index j, EigenPairs&& pairs) {
    eigs.eigenvalues.row(j) = pairs.values.transpose();
    eigs.eigenvectors[static_cast<size_t>(j)] = std::move(pairs.vectors);
    eigs.total_variance(j) = pairs.total;
}

// Upper half of the grid is the conjugate image of the lower half.
void reflect_upper_half(FrequencyEigenStructure& eigs) {
    const Eigen::Index n = eigs.frequencies();
    for (Eigen::Index j = n / 2 + 1; j < n; ++j) {
        eigs.eigenvalues.row(j) = eigs.eigenvalues.row(n - j);
        eigs.eigenvectors[static_cast<size_t>(j)] =
            eigs.eigenvectors[static_cast<size_t>(n - j)].conjugate();
        eigs.total_variance(j) = eigs.total_variance(n - j);
    }
}

FrequencyEigenStructure empty_structure(Eigen::Index n, int q, Eigen::VectorXd freqs) {
    FrequencyEigenStructure eigs;
    eigs.eigenvalues = Eigen::MatrixXd::Zero(n, q);
    eigs.eigenvectors.resize(static_cast<size_t>(n));
    eigs.total_variance = Eigen::VectorXd::Zero(n);
    eigs.freqs = std::move(freqs);
    return eigs;
}

}  // namespace

void normalize_phase(Eigen::Ref<Eigen::VectorXcd> v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double modulus = std::abs(v(i));
        if (modulus > kPhaseModulusFloor) {
            v *= std::conj(v(i)) / modulus;
            v(i) = modulus;
            return;
        }
    }
}

FourierCoefficients fourier_coefficients(const MultichannelSeries& series) {
    validate(series);
    const Eigen::MatrixXd x = centered(series.values);
    const Eigen::Index n = x.rows();
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));

    FourierCoefficients out;
    out.coeffs.resize(n, x.cols());
    out.freqs = frequency_grid(n);
    detail::DftPlan plan(static_cast<int>(n));
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        plan.forward_real({x.col(c).data(), static_cast<size_t>(n)},
                          {out.coeffs.col(c).data(), static_cast<size_t>(n)});
    }
    out.coeffs *= scale;
    return out;
}

SpectralDensityField periodogram_field(const FourierCoefficients& coeffs) {
    if (coeffs.frequencies() < 1 || coeffs.channels() < 1)
        throw ValidationError("empty Fourier coefficients");
    if (!coeffs.coeffs.allFinite()) throw ValidationError("non-finite Fourier coefficient");
    SpectralDensityField field;
    field.freqs = coeffs.freqs;
    field.smoothing_span = 1;
    field.matrices.reserve(static_cast<size_t>(coeffs.frequencies()));
    for (Eigen::Index j = 0; j < coeffs.frequencies(); ++j) {
        const Eigen::VectorXcd d = coeffs.coeffs.row(j).transpose();
        field.matrices.emplace_back(d * d.adjoint());
    }
    return field;
}

SpectralDensityField smooth_field(const SpectralDensityField& field, int span) {
    const Eigen::Index n = field.frequencies();
    if (n < 1) throw ValidationError("empty spectral field");
    check_span(span, n);
    const int half = span / 2;
    const Eigen::Index p = field.channels();

    SpectralDensityField out;
    out.freqs = field.freqs;
    out.smoothing_span = span;
    out.matrices.resize(static_cast<size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(p, p);
        for (int r = -half; r <= half; ++r) {
            const Eigen::Index k = ((j + r) % n + n) % n;
            acc += field.matrices[static_cast<size_t>(k)];
        }
        acc /= static_cast<double>(span);
        out.matrices[static_cast<size_t>(j)] = 0.5 * (acc + acc.adjoint());
    }
    return out;
}

Eigen::VectorXd smooth_circular(const Eigen::VectorXd& values, int span) {
    const Eigen::Index n = values.size();
    if (n < 1) throw ValidationError("empty sequence");
    check_span(span, n);
    const int half = span / 2;
    Eigen::VectorXd out(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double acc = 0.0;
        for (int r = -half; r <= half; ++r) acc += values(((j + r) % n + n) % n);
        out(j) = acc / static_cast<double>(span);
    }
    return out;
}

FrequencyEigenStructure eigen_field(const SpectralDensityField& field, int q) {
    const Eigen::Index n = field.frequencies();
    if (n < 1) throw ValidationError("empty spectral field");
    const Eigen::Index p = field.channels();
    if (q < 1 || q > p)
        throw ValidationError("component count q=" + std::to_string(q) + " must lie in [1, " +
                              std::to_string(p) + "]");

    double scale = 0.0;
    for (const auto& m : field.matrices) {
        if (m.rows() != p || m.cols() != p)
            throw ValidationError("spectral matrices must all be " + std::to_string(p) + "x" +
                                  std::to_string(p));
        if (!m.allFinite()) throw ValidationError("non-finite spectral matrix entry");
        scale = std::max(scale, m.cwiseAbs().maxCoeff());
    }
    for (Eigen::Index j = 1; j < n; ++j) {
        const auto& lower = field.matrices[static_cast<size_t>(n - j)];
        const auto& upper = field.matrices[static_cast<size_t>(j)];
        if ((lower - upper.conjugate()).cwiseAbs().maxCoeff() >
            kConjugateSymmetryTolerance * std::max(scale, 1e-300))
            throw ValidationError("spectral field is not conjugate-symmetric at frequency index " +
                                  std::to_string(j));
    }

    FrequencyEigenStructure eigs = empty_structure(n, q, field.freqs);
    for (Eigen::Index j = 0; j <= n / 2; ++j) {
        store(eigs, j, solve_hermitian(field.matrices[static_cast<size_t>(j)], q, j, n));
    }
    reflect_upper_half(eigs);
    return eigs;
}

FrequencyEigenStructure smoothed_eigen_structure(const FourierCoefficients& coeffs, int span, int q) {
    const Eigen::Index n = coeffs.frequencies();
    const Eigen::Index p = coeffs.channels();
    if (n < 1 || p < 1) throw ValidationError("empty Fourier coefficients");
    check_span(span, n);
    if (q < 1 || q > p)
        throw ValidationError("component count q=" + std::to_string(q) + " must lie in [1, " +
                              std::to_string(p) + "]");

    const int half = span / 2;
    const bool factored = q <= std::min<Eigen::Index>(span, p);
    const double inv_sqrt_span = 1.0 / std::sqrt(static_cast<double>(span));
    FrequencyEigenStructure eigs = empty_structure(n, q, coeffs.freqs);

    Eigen::MatrixXcd window(p, span);
    for (Eigen::Index j = 0; j <= n / 2; ++j) {
        for (int r = -half; r <= half; ++r) {
            const Eigen::Index k = ((j + r) % n + n) % n;
            window.col(r + half) = coeffs.coeffs.row(k).transpose() * inv_sqrt_span;
        }

        bool solved = false;
        if (factored) {
            std::optional<EigenPairs> pairs;
            if (j == 0 || 2 * j == n) {
                // neighbours pair up as conjugates, so a real factor has the same outer product
                Eigen::MatrixXd real_window(p, span);
                real_window.col(0) = window.col(half).real();
                for (int r = 1; r <= half; ++r) {
                    real_window.col(2 * r - 1) = std::sqrt(2.0) * window.col(half + r).real();
                    real_window.col(2 * r) = std::sqrt(2.0) * window.col(half + r).imag();
                }
                pairs = factored_solve(real_window, q, j);
            } else {
                pairs = factored_solve(window, q, j);
            }
            if (pairs) {
                store(eigs, j, std::move(*pairs));
                solved = true;
            }
        }
        if (!solved) {
            const Eigen::MatrixXcd m = window * window.adjoint();
            store(eigs, j, solve_hermitian(0.5 * (m + m.adjoint()), q, j, n));
        }
    }
    reflect_upper_half(eigs);
    return eigs;
}

}  // namespace specpc

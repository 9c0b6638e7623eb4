#include "specpc/spectral_pca.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Eigenvalues>

#include "fft.hpp"
#include "specpc/error.hpp"

namespace specpc {

namespace {

constexpr double kImaginaryResidualTolerance = 1e-8;

void check_options(const SpectralPcaOptions& options, Eigen::Index length, Eigen::Index channels) {
    if (options.components < 1 || options.components > channels)
        throw ValidationError("component count q=" + std::to_string(options.components) +
                              " must lie in [1, " + std::to_string(channels) + "]");
    if (options.radius < 0 || options.radius > length / 2)
        throw ValidationError("filter radius R=" + std::to_string(options.radius) +
                              " must lie in [0, T/2=" + std::to_string(length / 2) + "]");
}

}  // namespace

std::string_view to_string(ComponentSource source) {
    return source == ComponentSource::spectral ? "spectral" : "contemporaneous";
}

ComponentSource parse_component_source(std::string_view name) {
    if (name == "spectral") return ComponentSource::spectral;
    if (name == "contemporaneous") return ComponentSource::contemporaneous;
    throw ValidationError("unknown component source '" + std::string(name) +
                          "' (expected spectral or contemporaneous)");
}

ExtractionFilter build_filters(const FrequencyEigenStructure& eigs, int radius) {
    const Eigen::Index n = eigs.frequencies();
    if (n < 1) throw ValidationError("empty eigenstructure");
    if (radius < 0 || radius > n / 2)
        throw ValidationError("filter radius R=" + std::to_string(radius) + " must lie in [0, " +
                              std::to_string(n / 2) + "]");
    const Eigen::Index p = eigs.eigenvectors.front().rows();
    const int q = static_cast<int>(eigs.components());

    ExtractionFilter filter;
    filter.radius = radius;
    filter.coefficients.assign(static_cast<size_t>(q), Eigen::MatrixXd(2 * radius + 1, p));

    detail::DftPlan plan(static_cast<int>(n));
    Eigen::VectorXcd spectrum(n);
    Eigen::VectorXcd taps(n);
    double residual = 0.0;
    for (int l = 0; l < q; ++l) {
        for (Eigen::Index c = 0; c < p; ++c) {
            for (Eigen::Index j = 0; j < n; ++j)
                spectrum(j) = std::conj(eigs.eigenvectors[static_cast<size_t>(j)](c, l));
            plan.backward({spectrum.data(), static_cast<size_t>(n)},
                          {taps.data(), static_cast<size_t>(n)});
            taps /= static_cast<double>(n);
            for (int h = -radius; h <= radius; ++h) {
                const std::complex<double> b = taps((h + n) % n);
                residual = std::max(residual, std::abs(b.imag()));
                filter.coefficients[static_cast<size_t>(l)](h + radius, c) = b.real();
            }
            // lags +-n/2 alias the same tap; share it so the window stays one period
            if (2 * radius == n) {
                filter.coefficients[static_cast<size_t>(l)](0, c) *= 0.5;
                filter.coefficients[static_cast<size_t>(l)](2 * radius, c) *= 0.5;
            }
        }
    }
    if (residual >= kImaginaryResidualTolerance)
        throw NumericalError("extraction filter has imaginary residual " + std::to_string(residual) +
                             "; eigenvectors are not conjugate-symmetric across frequencies");
    return filter;
}

Eigen::MatrixXd apply_filters(const ExtractionFilter& filter, const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    const int radius = filter.radius;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, filter.components());
    for (int l = 0; l < filter.components(); ++l) {
        const Eigen::MatrixXd& b = filter.coefficients[static_cast<size_t>(l)];
        if (b.cols() != x.cols())
            throw ValidationError("filter has " + std::to_string(b.cols()) + " channels, data has " +
                                  std::to_string(x.cols()));
        for (int h = -radius; h <= radius; ++h) {
            // t ranges over [max(0, h), min(n, n + h)) so that t - h stays in range.
            const Eigen::Index first = std::max<Eigen::Index>(0, h);
            const Eigen::Index last = std::min<Eigen::Index>(n, n + h);
            if (last <= first) continue;
            out.col(l).segment(first, last - first) +=
                x.middleRows(first - h, last - first) * b.row(h + radius).transpose();
        }
    }
    return out;
}

FrequencyEigenStructure spectral_eigenstructure(const MultichannelSeries& series, int span, int q) {
    const FourierCoefficients coeffs = fourier_coefficients(series);
    if (series.channels() > span) return smoothed_eigen_structure(coeffs, span, q);
    return eigen_field(smooth_field(periodogram_field(coeffs), span), q);
}

SummaryComponents extract_spectral_pcs(const MultichannelSeries& series,
                                       const SpectralPcaOptions& options) {
    validate(series);
    check_options(options, series.length(), series.channels());
    const FrequencyEigenStructure eigs =
        spectral_eigenstructure(series, options.span, options.components);
    const ExtractionFilter filter = build_filters(eigs, options.radius);

    SummaryComponents out;
    out.source = ComponentSource::spectral;
    out.values = apply_filters(filter, centered(series.values));
    out.explained_variance = explained_variance(eigs);
    return out;
}

SummaryComponents extract_spectral_pcs_per_block(const MultichannelSeries& series,
                                                 const SpectralPcaOptions& options,
                                                 int block_length) {
    validate(series);
    if (block_length < 4)
        throw ValidationError("block length must be at least 4, got " +
                              std::to_string(block_length));
    const Eigen::Index n = series.length();
    const int q = options.components;
    check_options({q, 0, options.span}, n, series.channels());

    SummaryComponents out;
    out.source = ComponentSource::spectral;
    out.values = Eigen::MatrixXd::Zero(n, q);
    Eigen::VectorXd explained_num = Eigen::VectorXd::Zero(q);
    double explained_den = 0.0;

    for (Eigen::Index start = 0; start < n; start += block_length) {
        const Eigen::Index len = std::min<Eigen::Index>(block_length, n - start);
        if (len < 4) break;
        MultichannelSeries block(series.values.middleRows(start, len), series.sampling_rate);
        const int span = std::min<int>(options.span, static_cast<int>(len) - (len % 2 == 0 ? 1 : 0));
        const int radius = std::min<int>(options.radius, static_cast<int>(len / 2));
        const FrequencyEigenStructure eigs = spectral_eigenstructure(block, span, q);
        const ExtractionFilter filter = build_filters(eigs, radius);
        out.values.middleRows(start, len) = apply_filters(filter, centered(block.values));
        for (int l = 0; l < q; ++l) explained_num(l) += eigs.eigenvalues.col(l).sum();
        explained_den += eigs.total_variance.sum();
    }
    if (!(explained_den > 0.0)) throw ValidationError("series has zero total variance");
    Eigen::VectorXd cumulative(q);
    double acc = 0.0;
    for (int l = 0; l < q; ++l) {
        acc += explained_num(l);
        cumulative(l) = std::min(1.0, acc / explained_den);
    }
    out.explained_variance = cumulative;
    return out;
}

SummaryComponents contemporaneous_pcs(const MultichannelSeries& series, int q) {
    validate(series);
    const Eigen::Index p = series.channels();
    if (q < 1 || q > p)
        throw ValidationError("component count q=" + std::to_string(q) + " must lie in [1, " +
                              std::to_string(p) + "]");
    const Eigen::MatrixXd x = centered(series.values);
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(x.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw NumericalError("covariance eigendecomposition did not converge");

    Eigen::VectorXd descending = solver.eigenvalues().reverse();
    Eigen::MatrixXd loadings(p, q);
    for (int l = 0; l < q; ++l) {
        Eigen::VectorXd e = solver.eigenvectors().col(p - 1 - l);
        for (Eigen::Index i = 0; i < p; ++i) {
            if (std::abs(e(i)) > 1e-9) {
                if (e(i) < 0.0) e = -e;
                break;
            }
        }
        loadings.col(l) = e;
    }
    descending = descending.cwiseMax(0.0);

    SummaryComponents out;
    out.source = ComponentSource::contemporaneous;
    out.values = x * loadings;
    out.explained_variance = explained_variance(descending).head(q);
    return out;
}

Eigen::VectorXd explained_variance(const FrequencyEigenStructure& eigs) {
    const double total = eigs.total_variance.sum();
    if (!(total > 0.0)) throw ValidationError("zero total variance; explained variance undefined");
    const Eigen::Index q = eigs.components();
    Eigen::VectorXd cumulative(q);
    double acc = 0.0;
    for (Eigen::Index l = 0; l < q; ++l) {
        acc += eigs.eigenvalues.col(l).sum();
        cumulative(l) = std::min(1.0, acc / total);
    }
    return cumulative;
}

Eigen::VectorXd explained_variance(const Eigen::VectorXd& eigenvalues) {
    const double total = eigenvalues.sum();
    if (!(total > 0.0)) throw ValidationError("zero total variance; explained variance undefined");
    Eigen::VectorXd cumulative(eigenvalues.size());
    double acc = 0.0;
    for (Eigen::Index l = 0; l < eigenvalues.size(); ++l) {
        acc += eigenvalues(l);
        cumulative(l) = std::min(1.0, acc / total);
    }
    return cumulative;
}

}  // namespace specpc

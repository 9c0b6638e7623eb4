#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "specpc/fourier.hpp"
#include "specpc/series.hpp"

namespace specpc {

/// Real extraction filters b_l(h), h = -R..R. `coefficients[l]` is a
/// (2R+1) x p matrix whose row h+R holds the channel weights at lag h.
struct ExtractionFilter {
    std::vector<Eigen::MatrixXd> coefficients;
    int radius = 0;

    int components() const { return static_cast<int>(coefficients.size()); }
    int length() const { return 2 * radius + 1; }
};

enum class ComponentSource { spectral, contemporaneous };

std::string_view to_string(ComponentSource source);
ComponentSource parse_component_source(std::string_view name);

/// Low-dimensional summary series. `values` is T x q; `explained_variance`
/// holds q cumulative proportions of total variance.
struct SummaryComponents {
    Eigen::MatrixXd values;
    ComponentSource source = ComponentSource::spectral;
    Eigen::VectorXd explained_variance;
};

struct SpectralPcaOptions {
    int components = 3;  // q
    int radius = 50;     // R, filter lag truncation in samples
    int span = 5;        // Daniell window width
};

/// Inverse transform of the conjugated eigenvectors,
/// b_l(h) = (1/T) sum_j V_l^*(w_j) exp(2 pi i w_j h), truncated to |h| <= R.
/// Throws NumericalError if the imaginary residual exceeds 1e-8, which means
/// the eigenvectors were not conjugate-symmetric across frequencies.
ExtractionFilter build_filters(const FrequencyEigenStructure& eigs, int radius);

/// u_l(t) = sum_{h=-R}^{R} b_l(h) . x(t-h) with x taken as zero outside
/// [0, T-1]. `x` is the (already centered) T x p sample matrix.
Eigen::MatrixXd apply_filters(const ExtractionFilter& filter, const Eigen::MatrixXd& x);

/// Spectral eigenstructure of a series' smoothed periodogram. Uses the
/// factored route when p exceeds the span and the full Hermitian solve
/// otherwise.
FrequencyEigenStructure spectral_eigenstructure(const MultichannelSeries& series, int span, int q);

/// First q spectral principal components, with filters estimated once over
/// the whole series.
SummaryComponents extract_spectral_pcs(const MultichannelSeries& series,
                                       const SpectralPcaOptions& options = {});

/// Spectral principal components with filters re-estimated inside every
/// block of `block_length` samples. A trailing partial block is processed on
/// its own when it has at least 4 samples and left at zero otherwise.
SummaryComponents extract_spectral_pcs_per_block(const MultichannelSeries& series,
                                                 const SpectralPcaOptions& options,
                                                 int block_length);

/// Classical PCA on the lag-0 covariance of the centered series,
/// u_l(t) = e_l' x(t). Loadings are signed so their first significant entry
/// is positive.
SummaryComponents contemporaneous_pcs(const MultichannelSeries& series, int q);

/// Cumulative proportions sum_j sum_{l<=k} lambda_l(w_j) / sum_j total(w_j)
/// for k = 1..q.
Eigen::VectorXd explained_variance(const FrequencyEigenStructure& eigs);

/// Cumulative eigenvalue ratios for a full, descending eigenvalue list.
Eigen::VectorXd explained_variance(const Eigen::VectorXd& eigenvalues);

}  // namespace specpc

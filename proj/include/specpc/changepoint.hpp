#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "specpc/series.hpp"
#include "specpc/spectral_pca.hpp"

namespace specpc {

/// Smoothed periodograms of one summary series over consecutive,
/// non-overlapping blocks. `values(b, j)` is the estimate in block b at the
/// block Fourier frequency j / B, for j = 0..floor(B/2).
struct BlockSpectrumSeries {
    Eigen::MatrixXd values;
    int block_length = 100;
    double sampling_rate = 100.0;
    Eigen::VectorXd freqs_hz;

    int blocks() const { return static_cast<int>(values.rows()); }
    int bins() const { return static_cast<int>(values.cols()); }
};

/// Half-open block range [start, end).
struct Segment {
    int start = 0;
    int end = 0;

    int length() const { return end - start; }
};

/// Closed frequency band in Hz.
struct FrequencyBand {
    double low_hz = 0.0;
    double high_hz = 0.0;
};

/// CUSUM statistics over the candidate splits of one segment.
///
/// Row i of `per_frequency` and entry i of `aggregate` belong to the split
/// that puts i+1 blocks on the left, i.e. the absolute change block
/// segment.start + i + 1.
struct CusumTrace {
    Eigen::MatrixXd per_frequency;  // (len-1) x bins
    Eigen::VectorXd aggregate;      // len-1
    std::vector<int> bins_used;     // frequency bins entering the aggregate
    double threshold = 0.0;
    Segment segment;
    bool accepted = false;

    int split_block(Eigen::Index row) const { return segment.start + static_cast<int>(row) + 1; }
    /// Candidate row with the largest aggregate; ties go to the smallest index.
    Eigen::Index best_row() const;
    double max_aggregate() const { return aggregate.size() ? aggregate.maxCoeff() : 0.0; }
};

BlockSpectrumSeries block_spectra(const Eigen::VectorXd& series, int block_length, int span,
                                  double sampling_rate);

/// Detection threshold 0.8 log_{1.1}(length).
double threshold(double length);

/// C_t(w_j) for t = 1..len-1 within `segment`, scaled by the segment mean of
/// the spectrum at bin j. An all-zero bin yields zeros.
Eigen::VectorXd cusum_frequency(const BlockSpectrumSeries& spectra, Segment segment, int bin);

/// Sums C_t(w_j) over the bins (optionally restricted to `band`) where it
/// exceeds `tau`.
CusumTrace cusum_aggregate(const BlockSpectrumSeries& spectra, Segment segment, double tau,
                           std::optional<FrequencyBand> band = std::nullopt);

struct SegmentationResult {
    std::vector<int> change_blocks;   // ascending
    std::vector<CusumTrace> traces;  // every tested segment, in visiting order
};

/// Recursive binary segmentation: split at the aggregate argmax when it
/// exceeds `tau`, then recurse on both sides. Segments shorter than 3
/// blocks are not tested.
SegmentationResult segment_blocks(const BlockSpectrumSeries& spectra, Segment segment, double tau,
                                  std::optional<FrequencyBand> band = std::nullopt);

std::vector<int> binary_segmentation(const BlockSpectrumSeries& spectra, int start, int end,
                                     double tau, std::optional<FrequencyBand> band = std::nullopt);

struct DetectConfig {
    int component = 1;  // 1-based
    ComponentSource source = ComponentSource::spectral;
    int block_length = 100;
    int span = 5;
    int radius = 50;
    int components = 3;  // q; clamped to the channel count
    std::optional<FrequencyBand> band;
    bool per_block_filters = false;
    std::optional<double> threshold_override;
};

struct ChangePointReport {
    std::vector<int> change_blocks;
    std::vector<long> change_samples;
    std::vector<double> change_seconds;
    double threshold = 0.0;
    Eigen::VectorXd explained_variance;
    std::vector<CusumTrace> traces;
    BlockSpectrumSeries spectra;
    DetectConfig config;  // as applied, after clamping q
    long series_length = 0;
    int channels = 0;
    double sampling_rate = 100.0;
};

/// Two-stage pipeline: summary extraction, block spectra, binary
/// segmentation over all blocks with threshold(T) unless overridden.
ChangePointReport detect(const MultichannelSeries& series, const DetectConfig& config = {});

}  // namespace specpc

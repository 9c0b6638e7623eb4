#include "specpc/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "fft.hpp"
#include "specpc/error.hpp"
#include "specpc/fourier.hpp"

namespace specpc {

namespace {

void check_segment(const BlockSpectrumSeries& spectra, Segment segment) {
    if (segment.start < 0 || segment.end > spectra.blocks() || segment.start >= segment.end)
        throw ValidationError("segment [" + std::to_string(segment.start) + ", " +
                              std::to_string(segment.end) + ") is not inside [0, " +
                              std::to_string(spectra.blocks()) + ")");
}

std::vector<int> bins_in_band(const BlockSpectrumSeries& spectra, std::optional<FrequencyBand> band) {
    std::vector<int> bins;
    for (int j = 0; j < spectra.bins(); ++j) {
        if (!band || (spectra.freqs_hz(j) >= band->low_hz && spectra.freqs_hz(j) <= band->high_hz))
            bins.push_back(j);
    }
    if (bins.empty())
        throw ValidationError("frequency band [" + std::to_string(band->low_hz) + ", " +
                              std::to_string(band->high_hz) + "] Hz contains no frequency bins");
    return bins;
}

void segment_recursive(const BlockSpectrumSeries& spectra, Segment segment, double tau,
                       const std::optional<FrequencyBand>& band, SegmentationResult& out) {
    if (segment.length() < 3) return;
    CusumTrace trace = cusum_aggregate(spectra, segment, tau, band);
    const Eigen::Index row = trace.best_row();
    const bool accept = trace.aggregate(row) > tau;
    trace.accepted = accept;
    const int split = trace.split_block(row);
    out.traces.push_back(std::move(trace));
    if (!accept) return;
    out.change_blocks.push_back(split);
    segment_recursive(spectra, {segment.start, split}, tau, band, out);
    segment_recursive(spectra, {split, segment.end}, tau, band, out);
}

}  // namespace

Eigen::Index CusumTrace::best_row() const {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < aggregate.size(); ++i)
        if (aggregate(i) > aggregate(best)) best = i;
    return best;
}

BlockSpectrumSeries block_spectra(const Eigen::VectorXd& series, int block_length, int span,
                                  double sampling_rate) {
    if (block_length < 2) throw ValidationError("block length must be at least 2");
    if (!(sampling_rate > 0.0)) throw ValidationError("sampling rate must be positive");
    if (!series.allFinite()) throw ValidationError("summary series has non-finite values");
    const int blocks = static_cast<int>(series.size() / block_length);
    if (blocks < 2)
        throw ValidationError("need at least 2 complete blocks of " + std::to_string(block_length) +
                              " samples, series has " + std::to_string(series.size()));
    if (span < 1 || span % 2 == 0 || span > block_length)
        throw ValidationError("smoothing span must be odd and in [1, block length], got " +
                              std::to_string(span));

    const int bins = block_length / 2 + 1;
    BlockSpectrumSeries out;
    out.block_length = block_length;
    out.sampling_rate = sampling_rate;
    out.values.resize(blocks, bins);
    out.freqs_hz.resize(bins);
    for (int j = 0; j < bins; ++j) out.freqs_hz(j) = sampling_rate * j / block_length;

    detail::DftPlan plan(block_length);
    Eigen::VectorXcd d(block_length);
    for (int b = 0; b < blocks; ++b) {
        Eigen::VectorXd x = series.segment(static_cast<Eigen::Index>(b) * block_length, block_length);
        x.array() -= x.mean();
        plan.forward_real({x.data(), static_cast<size_t>(block_length)},
                          {d.data(), static_cast<size_t>(block_length)});
        const Eigen::VectorXd periodogram = d.cwiseAbs2() / static_cast<double>(block_length);
        out.values.row(b) = smooth_circular(periodogram, span).head(bins).transpose();
    }
    return out;
}

double threshold(double length) {
    if (!(length > 1.0)) throw ValidationError("threshold needs a length above 1");
    return 0.8 * std::log(length) / std::log(1.1);
}

Eigen::VectorXd cusum_frequency(const BlockSpectrumSeries& spectra, Segment segment, int bin) {
    check_segment(spectra, segment);
    if (segment.length() < 3)
        throw ValidationError("CUSUM needs a segment of at least 3 blocks, got " +
                              std::to_string(segment.length()));
    if (bin < 0 || bin >= spectra.bins())
        throw ValidationError("frequency bin " + std::to_string(bin) + " out of range");

    const int len = segment.length();
    const auto f = spectra.values.col(bin).segment(segment.start, len);
    const double total = f.sum();
    const double scale = total / len;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(len - 1);
    if (!(scale > 0.0)) return c;

    const double n = len;
    double left = 0.0;
    for (int t = 1; t < len; ++t) {
        left += f(t - 1);
        const double right = total - left;
        const double stat = std::sqrt((n - t) / (n * t)) * left - std::sqrt(t / (n * (n - t))) * right;
        c(t - 1) = std::abs(stat) / scale;
    }
    return c;
}

CusumTrace cusum_aggregate(const BlockSpectrumSeries& spectra, Segment segment, double tau,
                           std::optional<FrequencyBand> band) {
    check_segment(spectra, segment);
    CusumTrace trace;
    trace.segment = segment;
    trace.threshold = tau;
    trace.bins_used = bins_in_band(spectra, band);
    trace.per_frequency.resize(segment.length() - 1, spectra.bins());
    for (int j = 0; j < spectra.bins(); ++j) trace.per_frequency.col(j) = cusum_frequency(spectra, segment, j);

    trace.aggregate = Eigen::VectorXd::Zero(segment.length() - 1);
    for (Eigen::Index i = 0; i < trace.aggregate.size(); ++i) {
        double acc = 0.0;
        for (int j : trace.bins_used) {
            const double c = trace.per_frequency(i, j);
            if (c > tau) acc += c;
        }
        trace.aggregate(i) = acc;
    }
    return trace;
}

SegmentationResult segment_blocks(const BlockSpectrumSeries& spectra, Segment segment, double tau,
                                  std::optional<FrequencyBand> band) {
    check_segment(spectra, segment);
    bins_in_band(spectra, band);
    SegmentationResult out;
    segment_recursive(spectra, segment, tau, band, out);
    std::sort(out.change_blocks.begin(), out.change_blocks.end());
    return out;
}

std::vector<int> binary_segmentation(const BlockSpectrumSeries& spectra, int start, int end,
                                     double tau, std::optional<FrequencyBand> band) {
    return segment_blocks(spectra, {start, end}, tau, band).change_blocks;
}

ChangePointReport detect(const MultichannelSeries& series, const DetectConfig& config) {
    validate(series);
    DetectConfig applied = config;
    applied.components = std::min<int>(config.components, static_cast<int>(series.channels()));
    if (applied.components < 1) throw ValidationError("component count must be at least 1");
    if (applied.component < 1 || applied.component > applied.components)
        throw ValidationError("component " + std::to_string(config.component) + " must lie in [1, " +
                              std::to_string(applied.components) + "]");
    if (series.length() < 2L * applied.block_length)
        throw ValidationError("series of " + std::to_string(series.length()) +
                              " samples is shorter than two blocks of " +
                              std::to_string(applied.block_length));
    if (applied.band && applied.band->low_hz > applied.band->high_hz)
        throw ValidationError("frequency band low edge exceeds high edge");

    SummaryComponents summary;
    if (applied.source == ComponentSource::contemporaneous) {
        summary = contemporaneous_pcs(series, applied.components);
    } else {
        const SpectralPcaOptions options{applied.components, applied.radius, applied.span};
        summary = applied.per_block_filters
                      ? extract_spectral_pcs_per_block(series, options, applied.block_length)
                      : extract_spectral_pcs(series, options);
    }

    ChangePointReport report;
    report.config = applied;
    report.series_length = static_cast<long>(series.length());
    report.channels = static_cast<int>(series.channels());
    report.sampling_rate = series.sampling_rate;
    report.explained_variance = summary.explained_variance;
    report.spectra = block_spectra(summary.values.col(applied.component - 1), applied.block_length,
                                   applied.span, series.sampling_rate);
    report.threshold = applied.threshold_override
                           ? *applied.threshold_override
                           : threshold(static_cast<double>(series.length()));

    SegmentationResult seg =
        segment_blocks(report.spectra, {0, report.spectra.blocks()}, report.threshold, applied.band);
    report.change_blocks = std::move(seg.change_blocks);
    report.traces = std::move(seg.traces);
    for (int b : report.change_blocks) {
        const long sample = static_cast<long>(b) * applied.block_length;
        report.change_samples.push_back(sample);
        report.change_seconds.push_back(static_cast<double>(sample) / series.sampling_rate);
    }
    return report;
}

}  // namespace specpc

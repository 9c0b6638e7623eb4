#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace specpc {

/// Real-valued multichannel time series: T rows (time) by p columns (channels).
struct MultichannelSeries {
    Eigen::MatrixXd values;
    double sampling_rate = 100.0;
    std::vector<std::string> channel_names;

    MultichannelSeries() = default;
    explicit MultichannelSeries(Eigen::MatrixXd v, double fs = 100.0,
                                std::vector<std::string> names = {})
        : values(std::move(v)), sampling_rate(fs), channel_names(std::move(names)) {}

    Eigen::Index length() const { return values.rows(); }
    Eigen::Index channels() const { return values.cols(); }
};

/// Throws ValidationError unless T >= 4, p >= 1, fs > 0, every value finite
/// and channel_names is empty or has p entries. The message names the first
/// offending channel and row.
void validate(const MultichannelSeries& series);

/// Per-channel mean-centered copy of the sample matrix.
Eigen::MatrixXd centered(const Eigen::MatrixXd& values);

}  // namespace specpc

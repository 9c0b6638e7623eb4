#include "specpc/series.hpp"

#include <cmath>
#include <string>

#include "specpc/error.hpp"

namespace specpc {

void validate(const MultichannelSeries& series) {
    const auto& x = series.values;
    if (x.rows() < 4)
        throw ValidationError("series needs at least 4 samples, got " + std::to_string(x.rows()));
    if (x.cols() < 1) throw ValidationError("series needs at least one channel");
    if (!(series.sampling_rate > 0.0) || !std::isfinite(series.sampling_rate))
        throw ValidationError("sampling rate must be positive");
    if (!series.channel_names.empty() &&
        static_cast<Eigen::Index>(series.channel_names.size()) != x.cols())
        throw ValidationError("channel_names has " + std::to_string(series.channel_names.size()) +
                              " entries for " + std::to_string(x.cols()) + " channels");
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        for (Eigen::Index t = 0; t < x.rows(); ++t) {
            if (!std::isfinite(x(t, c))) {
                std::string name = series.channel_names.empty()
                                       ? std::to_string(c)
                                       : series.channel_names[static_cast<size_t>(c)];
                throw ValidationError("non-finite value in channel " + name + " at row " +
                                      std::to_string(t));
            }
        }
    }
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& values) {
    Eigen::RowVectorXd mean = values.colwise().mean();
    return values.rowwise() - mean;
}

}  // namespace specpc

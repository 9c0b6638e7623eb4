#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specpc/series.hpp"

namespace specpc::io {

/// Numeric table with a header row of column names.
struct Table {
    std::vector<std::string> header;
    Eigen::MatrixXd values;  // rows x header.size()
};

/// Parses a comma-separated table: a header row of names, then one row per
/// record with exactly one numeric cell per column. Rows are numbered as
/// file lines (the header is row 1); errors name the offending row.
Table read_table(std::istream& in);
Table read_table(const std::filesystem::path& path);

MultichannelSeries read_series(const std::filesystem::path& path, double sampling_rate = 100.0);

/// Decimal text with 12 significant digits, independent of the C locale.
std::string format_number(double value);

std::string to_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& values);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// `key = value` lines; '#' starts a comment; blank lines are skipped.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

}  // namespace specpc::io

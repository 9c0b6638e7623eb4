#include "specpc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>

#include "specpc/error.hpp"

namespace specpc::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    size_t pos = 0;
    while (true) {
        const size_t comma = line.find(',', pos);
        cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return cells;
}

bool parse_double(std::string_view cell, double& out) {
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

}  // namespace

Table read_table(std::istream& in) {
    Table table;
    std::string line;
    long row = 0;
    bool have_header = false;
    std::vector<double> cells;
    long records = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto parts = split(line);
        if (!have_header) {
            for (auto name : parts) table.header.emplace_back(name);
            have_header = true;
            continue;
        }
        if (parts.size() != table.header.size())
            throw ValidationError("row " + std::to_string(row) + ": expected " +
                                  std::to_string(table.header.size()) + " cells, found " +
                                  std::to_string(parts.size()));
        for (size_t c = 0; c < parts.size(); ++c) {
            double v = 0.0;
            if (!parse_double(parts[c], v))
                throw ValidationError("row " + std::to_string(row) + ", column " + std::to_string(c + 1) +
                                      ": non-numeric cell '" + std::string(parts[c]) + "'");
            cells.push_back(v);
        }
        ++records;
    }
    if (!have_header) throw ValidationError("empty input: missing header row");
    const auto cols = static_cast<Eigen::Index>(table.header.size());
    table.values.resize(records, cols);
    for (long r = 0; r < records; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) table.values(r, c) = cells[static_cast<size_t>(r * cols + c)];
    return table;
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return read_table(in);
}

MultichannelSeries read_series(const std::filesystem::path& path, double sampling_rate) {
    Table t = read_table(path);
    MultichannelSeries series(std::move(t.values), sampling_rate, std::move(t.header));
    validate(series);
    return series;
}

std::string format_number(double value) {
    if (value == 0.0) return "0";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 12);
    if (ec != std::errc()) throw NumericalError("cannot format number");
    return std::string(buf, ptr);
}

std::string to_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
    std::string out;
    for (size_t c = 0; c < header.size(); ++c) {
        if (c) out += ',';
        out += header[c];
    }
    out += '\n';
    for (Eigen::Index r = 0; r < values.rows(); ++r) {
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            if (c) out += ',';
            out += format_number(values(r, c));
        }
        out += '\n';
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    long row = 0;
    while (std::getline(in, line)) {
        ++row;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != view.npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == view.npos)
            throw ValidationError(path.string() + " line " + std::to_string(row) + ": expected key = value");
        const auto key = trim(view.substr(0, eq));
        if (key.empty()) throw ValidationError(path.string() + " line " + std::to_string(row) + ": empty key");
        out[std::string(key)] = std::string(trim(view.substr(eq + 1)));
    }
    return out;
}

}  // namespace specpc::io

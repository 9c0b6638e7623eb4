#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <CLI11.hpp>
#include <json.hpp>

#include "specpc/changepoint.hpp"
#include "specpc/error.hpp"
#include "specpc/io.hpp"
#include "specpc/sim.hpp"

namespace specpc::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kOutputDirEnv = "SPECPC_OUTPUT_DIR";
constexpr const char* kDefaultOutputDir = "specpc-out";

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "input",    "out",       "sampling_rate", "scenario", "channels_changed", "replicates",
        "seed",     "B",         "span",          "R",        "q",                "component",
        "band",     "source",    "method",        "threshold", "per_block",       "json",
    };
    return keys;
}

// Command-line values layered over config-file values layered over defaults.
class Settings {
public:
    void add_config(const fs::path& path) {
        for (auto& [k, v] : io::read_config(path)) {
            if (!known_keys().count(k)) throw UsageError("unknown config key '" + k + "' in " + path.string());
            values_[k] = v;
        }
    }
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::optional<std::string> get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }
    std::string get_or(const std::string& key, const std::string& fallback) const {
        return get(key).value_or(fallback);
    }

    long integer(const std::string& key, long fallback) const {
        auto v = get(key);
        if (!v) return fallback;
        long out = 0;
        const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
        if (ec != std::errc() || ptr != v->data() + v->size())
            throw UsageError("option " + key + " expects an integer, got '" + *v + "'");
        return out;
    }
    std::optional<double> real(const std::string& key) const {
        auto v = get(key);
        if (!v) return std::nullopt;
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
        if (ec != std::errc() || ptr != v->data() + v->size())
            throw UsageError("option " + key + " expects a number, got '" + *v + "'");
        return out;
    }
    bool flag(const std::string& key) const {
        auto v = get(key);
        if (!v) return false;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw UsageError("option " + key + " expects true or false, got '" + *v + "'");
    }
    std::optional<FrequencyBand> band() const {
        auto v = get("band");
        if (!v || v->empty() || *v == "none") return std::nullopt;
        const auto comma = v->find(',');
        if (comma == std::string::npos) throw UsageError("band expects 'low,high' in Hz, got '" + *v + "'");
        Settings parts;
        parts.set("low", v->substr(0, comma));
        parts.set("high", v->substr(comma + 1));
        FrequencyBand band{*parts.real("low"), *parts.real("high")};
        if (band.low_hz > band.high_hz) throw UsageError("band low edge exceeds high edge");
        return band;
    }

private:
    std::map<std::string, std::string> values_;
};

// Registers a string option bound to a settings key; applied after parsing.
struct Bindings {
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> options;
    std::map<std::string, bool> flags;
    std::map<std::string, CLI::Option*> flag_options;
    std::string config_path;

    void option(CLI::App* app, const std::string& key, const std::string& names, const std::string& help) {
        options[key] = app->add_option(names, raw[key], help);
    }
    void flag(CLI::App* app, const std::string& key, const std::string& names, const std::string& help) {
        flag_options[key] = app->add_flag(names, flags[key], help);
    }
    void config(CLI::App* app) {
        app->add_option("--config", config_path, "key = value file; command-line flags take precedence");
    }
    Settings resolve() const {
        Settings s;
        if (!config_path.empty()) s.add_config(config_path);
        for (const auto& [key, opt] : options)
            if (opt->count() > 0) s.set(key, raw.at(key));
        for (const auto& [key, opt] : flag_options)
            if (opt->count() > 0) s.set(key, flags.at(key) ? "true" : "false");
        return s;
    }
};

fs::path output_dir(const Settings& s) {
    if (auto v = s.get("out")) return *v;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return kDefaultOutputDir;
}

DetectConfig detect_config(const Settings& s) {
    DetectConfig c;
    c.component = static_cast<int>(s.integer("component", c.component));
    c.block_length = static_cast<int>(s.integer("B", c.block_length));
    c.span = static_cast<int>(s.integer("span", c.span));
    c.radius = static_cast<int>(s.integer("R", c.radius));
    c.components = static_cast<int>(s.integer("q", c.components));
    c.band = s.band();
    c.per_block_filters = s.flag("per_block");
    c.threshold_override = s.real("threshold");
    if (auto src = s.get("source")) {
        try {
            c.source = parse_component_source(*src);
        } catch (const ValidationError& e) {
            throw UsageError(e.what());
        }
    }
    if (c.block_length < 2) throw UsageError("B must be at least 2");
    if (c.span < 1 || c.span % 2 == 0) throw UsageError("span must be a positive odd integer");
    if (c.radius < 0) throw UsageError("R must be nonnegative");
    if (c.components < 1) throw UsageError("q must be at least 1");
    if (c.component < 1) throw UsageError("component must be at least 1");
    return c;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep = ",") {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

template <typename Range>
std::string join_numbers(const Range& values) {
    std::vector<std::string> parts;
    for (const auto& v : values) parts.push_back(io::format_number(static_cast<double>(v)));
    return join(parts);
}

// Number rounded to the emitted precision, for JSON output.
double emitted(double v) { return std::stod(io::format_number(v)); }

ordered_json numbers_json(const Eigen::VectorXd& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(emitted(v(i)));
    return out;
}

std::string band_text(const std::optional<FrequencyBand>& band) {
    if (!band) return "none";
    return io::format_number(band->low_hz) + "," + io::format_number(band->high_hz);
}

std::string report_text(const ChangePointReport& r) {
    std::ostringstream os;
    const auto& c = r.config;
    os << "series_length: " << r.series_length << '\n'
       << "channels: " << r.channels << '\n'
       << "sampling_rate_hz: " << io::format_number(r.sampling_rate) << '\n'
       << "source: " << to_string(c.source) << '\n'
       << "component: " << c.component << '\n'
       << "components: " << c.components << '\n'
       << "block_length: " << c.block_length << '\n'
       << "span: " << c.span << '\n'
       << "radius: " << c.radius << '\n'
       << "per_block_filters: " << (c.per_block_filters ? "true" : "false") << '\n'
       << "band_hz: " << band_text(c.band) << '\n'
       << "threshold: " << io::format_number(r.threshold) << '\n'
       << "threshold_source: " << (c.threshold_override ? "override" : "formula") << '\n'
       << "explained_variance: " << join_numbers(r.explained_variance) << '\n'
       << "change_blocks: " << join_numbers(r.change_blocks) << '\n'
       << "change_samples: " << join_numbers(r.change_samples) << '\n'
       << "change_seconds: " << join_numbers(r.change_seconds) << '\n';
    return os.str();
}

std::string report_json(const ChangePointReport& r) {
    const auto& c = r.config;
    ordered_json j;
    j["series_length"] = r.series_length;
    j["channels"] = r.channels;
    j["sampling_rate_hz"] = emitted(r.sampling_rate);
    j["source"] = std::string(to_string(c.source));
    j["component"] = c.component;
    j["components"] = c.components;
    j["block_length"] = c.block_length;
    j["span"] = c.span;
    j["radius"] = c.radius;
    j["per_block_filters"] = c.per_block_filters;
    j["band_hz"] = c.band ? ordered_json::array({emitted(c.band->low_hz), emitted(c.band->high_hz)}) : ordered_json();
    j["threshold"] = emitted(r.threshold);
    j["threshold_source"] = c.threshold_override ? "override" : "formula";
    j["explained_variance"] = numbers_json(r.explained_variance);
    j["change_blocks"] = r.change_blocks;
    j["change_samples"] = r.change_samples;
    ordered_json seconds = ordered_json::array();
    for (double s : r.change_seconds) seconds.push_back(emitted(s));
    j["change_seconds"] = seconds;
    ordered_json traces = ordered_json::array();
    for (const auto& t : r.traces) {
        const auto row = t.best_row();
        traces.push_back({{"segment_start", t.segment.start},
                          {"segment_end", t.segment.end},
                          {"best_split_block", t.split_block(row)},
                          {"max_aggregate", emitted(t.aggregate(row))},
                          {"max_frequency_statistic", emitted(t.per_frequency.maxCoeff())},
                          {"accepted", t.accepted}});
    }
    j["traces"] = traces;
    return j.dump(2) + "\n";
}

std::string trace_csv(const ChangePointReport& r) {
    long rows = 0;
    for (const auto& t : r.traces) rows += t.aggregate.size();
    Eigen::MatrixXd table(rows, 8);
    long i = 0;
    for (size_t k = 0; k < r.traces.size(); ++k) {
        const auto& t = r.traces[k];
        for (Eigen::Index row = 0; row < t.aggregate.size(); ++row, ++i) {
            const int split = t.split_block(row);
            table.row(i) << static_cast<double>(k), t.segment.start, t.segment.end, split,
                static_cast<double>(split) * r.config.block_length, t.aggregate(row),
                t.per_frequency.row(row).maxCoeff(), (t.accepted && row == t.best_row()) ? 1.0 : 0.0;
        }
    }
    return io::to_csv({"trace", "segment_start", "segment_end", "split_block", "change_sample", "aggregate",
                       "max_frequency_statistic", "accepted"},
                      table);
}

std::string time_frequency_csv(const BlockSpectrumSeries& spectra) {
    std::vector<std::string> header{"block"};
    for (Eigen::Index j = 0; j < spectra.freqs_hz.size(); ++j) header.push_back(io::format_number(spectra.freqs_hz(j)));
    Eigen::MatrixXd table(spectra.blocks(), spectra.bins() + 1);
    for (int b = 0; b < spectra.blocks(); ++b) table(b, 0) = b;
    table.rightCols(spectra.bins()) = spectra.values;
    return io::to_csv(header, table);
}

int cmd_detect(const Settings& s, std::ostream& out) {
    const auto input = s.get("input");
    if (!input) throw UsageError("detect needs --input (or 'input' in the config file)");
    const double fs = s.real("sampling_rate").value_or(100.0);
    if (!(fs > 0.0)) throw UsageError("sampling rate must be positive");
    const DetectConfig config = detect_config(s);

    const MultichannelSeries series = io::read_series(*input, fs);
    if (series.length() < 2L * config.block_length)
        throw ValidationError("input has " + std::to_string(series.length()) + " rows; need at least 2B = " +
                              std::to_string(2 * config.block_length));
    const ChangePointReport report = detect(series, config);

    const fs::path dir = output_dir(s);
    const bool json = s.flag("json");
    io::write_file_atomic(dir / (json ? "report.json" : "report.txt"), json ? report_json(report) : report_text(report));
    io::write_file_atomic(dir / "cusum_trace.csv", trace_csv(report));
    io::write_file_atomic(dir / "time_frequency.csv", time_frequency_csv(report.spectra));

    if (report.change_samples.empty())
        out << "no change points detected (threshold " << io::format_number(report.threshold) << ")\n";
    else
        out << "change points (samples): " << join_numbers(report.change_samples) << '\n';
    out << "reports written to " << dir.string() << '\n';
    return kSuccess;
}

int cmd_simulate(const Settings& s, std::ostream& out) {
    const std::string name = s.get_or("scenario", "I");
    const long changed = s.integer("channels_changed", 64);
    const long seed = s.integer("seed", 1);
    if (seed < 0) throw UsageError("seed must be nonnegative");
    const auto names = sim::scenario_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw UsageError("unknown scenario '" + name + "' (expected " + join(names) + ")");

    const sim::ScenarioData data = sim::scenario(name, static_cast<int>(changed), static_cast<std::uint64_t>(seed));
    std::vector<std::string> header;
    for (Eigen::Index c = 0; c < data.series.channels(); ++c) header.push_back("ch" + std::to_string(c + 1));
    Eigen::MatrixXd truth(static_cast<Eigen::Index>(data.truth.size()), 1);
    for (size_t i = 0; i < data.truth.size(); ++i) truth(static_cast<Eigen::Index>(i), 0) = static_cast<double>(data.truth[i]);

    const fs::path dir = output_dir(s);
    io::write_file_atomic(dir / "series.csv", io::to_csv(header, data.series.values));
    io::write_file_atomic(dir / "truth.csv", io::to_csv({"change_sample"}, truth));
    out << "scenario " << name << ": " << data.series.length() << " x " << data.series.channels()
        << ", true change points " << join_numbers(data.truth) << '\n'
        << "written to " << dir.string() << '\n';
    return kSuccess;
}

int cmd_evaluate(const Settings& s, std::ostream& out) {
    sim::ExperimentSpec base;
    base.scenario = s.get_or("scenario", "I");
    base.channels_changed = static_cast<int>(s.integer("channels_changed", 64));
    const long replicates = s.integer("replicates", 100);
    if (replicates < 1) throw UsageError("replicates must be at least 1");
    base.replicates = static_cast<int>(replicates);
    const long seed = s.integer("seed", 1);
    if (seed < 0) throw UsageError("seed must be nonnegative");
    base.seed = static_cast<std::uint64_t>(seed);
    base.detect = detect_config(s);
    const auto names = sim::scenario_names();
    if (std::find(names.begin(), names.end(), base.scenario) == names.end())
        throw UsageError("unknown scenario '" + base.scenario + "' (expected " + join(names) + ")");

    const std::string method = s.get_or("method", s.get_or("source", "spectral"));
    std::vector<ComponentSource> sources;
    if (method == "both")
        sources = {ComponentSource::spectral, ComponentSource::contemporaneous};
    else if (method == "spectral" || method == "contemporaneous")
        sources = {parse_component_source(method)};
    else
        throw UsageError("method must be spectral, contemporaneous or both, got '" + method + "'");

    std::vector<std::pair<ComponentSource, sim::ExperimentResult>> results;
    for (ComponentSource src : sources) {
        sim::ExperimentSpec spec = base;
        spec.detect.source = src;
        results.emplace_back(src, sim::run_experiment(spec));
    }

    const bool json = s.flag("json");
    std::ostringstream table;
    ordered_json rows = ordered_json::array();
    table << "scenario  method           component  channels_changed  replicates  seed  detection_rate  "
             "detection_proportion  mad       threshold\n";
    for (const auto& [src, res] : results) {
        const auto& m = res.metrics;
        const std::string mad = m.mad ? io::format_number(*m.mad) : "NA";
        char line[512];
        std::snprintf(line, sizeof(line), "%-9s %-16s %-10d %-17d %-11d %-5lu %-15s %-21s %-9s %s\n",
                      base.scenario.c_str(), std::string(to_string(src)).c_str(), base.detect.component,
                      base.channels_changed, base.replicates, static_cast<unsigned long>(base.seed),
                      io::format_number(m.detection_rate).c_str(), io::format_number(m.detection_proportion).c_str(),
                      mad.c_str(), io::format_number(res.threshold).c_str());
        table << line;
        rows.push_back({{"scenario", base.scenario},
                        {"method", std::string(to_string(src))},
                        {"component", base.detect.component},
                        {"channels_changed", base.channels_changed},
                        {"replicates", base.replicates},
                        {"seed", base.seed},
                        {"detection_rate", emitted(m.detection_rate)},
                        {"detection_proportion", emitted(m.detection_proportion)},
                        {"mad", m.mad ? ordered_json(emitted(*m.mad)) : ordered_json()},
                        {"threshold", emitted(res.threshold)},
                        {"truth", res.truth}});
    }

    std::set<long> locations;
    for (const auto& [src, res] : results)
        for (const auto& [loc, count] : res.metrics.histogram) locations.insert(loc);
    std::vector<std::string> header{"location_sample"};
    for (const auto& [src, res] : results) header.push_back(std::string(to_string(src)) + "_" + std::to_string(base.detect.component));
    Eigen::MatrixXd hist = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(locations.size()), static_cast<Eigen::Index>(header.size()));
    Eigen::Index row = 0;
    for (long loc : locations) {
        hist(row, 0) = static_cast<double>(loc);
        for (size_t k = 0; k < results.size(); ++k) {
            const auto& h = results[k].second.metrics.histogram;
            if (auto it = h.find(loc); it != h.end()) hist(row, static_cast<Eigen::Index>(k + 1)) = it->second;
        }
        ++row;
    }

    const fs::path dir = output_dir(s);
    io::write_file_atomic(dir / (json ? "metrics.json" : "metrics.txt"), json ? rows.dump(2) + "\n" : table.str());
    io::write_file_atomic(dir / "histogram.csv", io::to_csv(header, hist));
    out << table.str();
    return kSuccess;
}

void add_detect_options(CLI::App* cmd, Bindings& b) {
    b.option(cmd, "component", "--component,-l", "1-based summary component (default 1)");
    b.option(cmd, "source", "--source", "spectral or contemporaneous (default spectral)");
    b.option(cmd, "B", "--block-length,-B", "block length in samples (default 100)");
    b.option(cmd, "span", "--span", "Daniell smoothing span, odd (default 5)");
    b.option(cmd, "R", "--radius,-R", "filter radius in samples (default 50)");
    b.option(cmd, "q", "--components,-q", "number of components to extract (default 3)");
    b.option(cmd, "band", "--band", "restrict detection to 'low,high' Hz");
    b.option(cmd, "threshold", "--threshold", "replace 0.8*log_1.1(T) by a fixed threshold");
    b.flag(cmd, "per_block", "--per-block", "estimate spectral filters inside each block");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Change-point detection with spectral principal components", "specpc"};
    app.require_subcommand(1);

    Bindings detect_b, simulate_b, evaluate_b;

    auto* detect_cmd = app.add_subcommand("detect", "detect change points in a CSV series");
    detect_b.config(detect_cmd);
    detect_b.option(detect_cmd, "input", "--input,-i", "CSV: header of channel names, one row per sample");
    detect_b.option(detect_cmd, "sampling_rate", "--sampling-rate", "samples per second (default 100)");
    detect_b.option(detect_cmd, "out", "--out,-o", "output directory");
    detect_b.flag(detect_cmd, "json", "--json", "write report.json instead of report.txt");
    add_detect_options(detect_cmd, detect_b);

    auto* simulate_cmd = app.add_subcommand("simulate", "write a simulated scenario and its true change points");
    simulate_b.config(simulate_cmd);
    simulate_b.option(simulate_cmd, "scenario", "--scenario", "I, II, III, appendix_var, appendix_cho or figure1");
    simulate_b.option(simulate_cmd, "channels_changed", "--channels-changed", "changed channels out of 128 (default 64)");
    simulate_b.option(simulate_cmd, "seed", "--seed", "random seed (default 1)");
    simulate_b.option(simulate_cmd, "out", "--out,-o", "output directory");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "run replicated experiments and score detections");
    evaluate_b.config(evaluate_cmd);
    evaluate_b.option(evaluate_cmd, "scenario", "--scenario", "scenario name (default I)");
    evaluate_b.option(evaluate_cmd, "channels_changed", "--channels-changed", "changed channels out of 128 (default 64)");
    evaluate_b.option(evaluate_cmd, "replicates", "--replicates", "number of replicates (default 100)");
    evaluate_b.option(evaluate_cmd, "seed", "--seed", "random seed shared by all methods (default 1)");
    evaluate_b.option(evaluate_cmd, "method", "--method", "spectral, contemporaneous or both (default spectral)");
    evaluate_b.option(evaluate_cmd, "out", "--out,-o", "output directory");
    evaluate_b.flag(evaluate_cmd, "json", "--json", "write metrics.json instead of metrics.txt");
    add_detect_options(evaluate_cmd, evaluate_b);

    std::vector<const char*> argv{"specpc"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (detect_cmd->parsed()) return cmd_detect(detect_b.resolve(), out);
        if (simulate_cmd->parsed()) return cmd_simulate(simulate_b.resolve(), out);
        return cmd_evaluate(evaluate_b.resolve(), out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ValidationError& e) {
        err << "invalid data: " << e.what() << '\n';
        return kValidation;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUnexpected;
    }
}

}  // namespace specpc::cli

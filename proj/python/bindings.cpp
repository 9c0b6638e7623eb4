#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "specpc/changepoint.hpp"
#include "specpc/error.hpp"
#include "specpc/fourier.hpp"
#include "specpc/sim.hpp"
#include "specpc/spectral_pca.hpp"

namespace py = pybind11;
using namespace specpc;

namespace {

MultichannelSeries to_series(const Eigen::MatrixXd& values, double sampling_rate) {
    return MultichannelSeries(values, sampling_rate);
}

std::optional<FrequencyBand> to_band(const std::optional<std::pair<double, double>>& band) {
    if (!band) return std::nullopt;
    return FrequencyBand{band->first, band->second};
}

BlockSpectrumSeries to_spectra(const Eigen::MatrixXd& values, int block_length, double sampling_rate) {
    BlockSpectrumSeries s;
    s.values = values;
    s.block_length = block_length;
    s.sampling_rate = sampling_rate;
    s.freqs_hz.resize(values.cols());
    for (Eigen::Index j = 0; j < values.cols(); ++j) s.freqs_hz(j) = sampling_rate * j / block_length;
    return s;
}

py::dict summary_dict(const SummaryComponents& s) {
    py::dict d;
    d["values"] = s.values;
    d["source"] = std::string(to_string(s.source));
    d["explained_variance"] = s.explained_variance;
    return d;
}

py::dict report_dict(const ChangePointReport& r) {
    py::dict d;
    d["change_blocks"] = r.change_blocks;
    d["change_samples"] = r.change_samples;
    d["change_seconds"] = r.change_seconds;
    d["threshold"] = r.threshold;
    d["explained_variance"] = r.explained_variance;
    d["block_spectra"] = r.spectra.values;
    d["freqs_hz"] = r.spectra.freqs_hz;
    py::list traces;
    for (const auto& t : r.traces) {
        py::dict td;
        td["segment"] = py::make_tuple(t.segment.start, t.segment.end);
        td["aggregate"] = t.aggregate;
        td["per_frequency"] = t.per_frequency;
        td["accepted"] = t.accepted;
        traces.append(td);
    }
    d["traces"] = traces;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spectral principal components and CUSUM change-point detection";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def(
        "fourier_coefficients",
        [](const Eigen::MatrixXd& values) { return fourier_coefficients(to_series(values, 100.0)).coeffs; },
        py::arg("values"), "Fourier coefficients (T x p, complex) of the mean-centered series.");

    m.def(
        "spectral_pcs",
        [](const Eigen::MatrixXd& values, int q, int radius, int span, double sampling_rate) {
            return summary_dict(extract_spectral_pcs(to_series(values, sampling_rate), {q, radius, span}));
        },
        py::arg("values"), py::arg("q") = 3, py::arg("radius") = 50, py::arg("span") = 5,
        py::arg("sampling_rate") = 100.0);

    m.def(
        "contemporaneous_pcs",
        [](const Eigen::MatrixXd& values, int q) { return summary_dict(contemporaneous_pcs(to_series(values, 100.0), q)); },
        py::arg("values"), py::arg("q") = 3);

    m.def(
        "block_spectra",
        [](const Eigen::VectorXd& series, int block_length, int span, double sampling_rate) {
            const auto s = block_spectra(series, block_length, span, sampling_rate);
            py::dict d;
            d["values"] = s.values;
            d["freqs_hz"] = s.freqs_hz;
            return d;
        },
        py::arg("series"), py::arg("block_length") = 100, py::arg("span") = 5, py::arg("sampling_rate") = 100.0);

    m.def("threshold", &threshold, py::arg("length"), "0.8 * log_1.1(length)");

    m.def(
        "cusum_frequency",
        [](const Eigen::MatrixXd& spectra, int start, int end, int bin) {
            return cusum_frequency(to_spectra(spectra, 2 * (static_cast<int>(spectra.cols()) - 1), 100.0), {start, end}, bin);
        },
        py::arg("spectra"), py::arg("start"), py::arg("end"), py::arg("bin"));

    m.def(
        "binary_segmentation",
        [](const Eigen::MatrixXd& spectra, int start, int end, double tau, int block_length, double sampling_rate,
           std::optional<std::pair<double, double>> band) {
            return binary_segmentation(to_spectra(spectra, block_length, sampling_rate), start, end, tau, to_band(band));
        },
        py::arg("spectra"), py::arg("start"), py::arg("end"), py::arg("tau"), py::arg("block_length") = 100,
        py::arg("sampling_rate") = 100.0, py::arg("band") = py::none());

    m.def(
        "detect",
        [](const Eigen::MatrixXd& values, double sampling_rate, int component, const std::string& source,
           int block_length, int span, int radius, int q, std::optional<std::pair<double, double>> band,
           bool per_block, std::optional<double> threshold_override) {
            DetectConfig c;
            c.component = component;
            c.source = parse_component_source(source);
            c.block_length = block_length;
            c.span = span;
            c.radius = radius;
            c.components = q;
            c.band = to_band(band);
            c.per_block_filters = per_block;
            c.threshold_override = threshold_override;
            return report_dict(detect(to_series(values, sampling_rate), c));
        },
        py::arg("values"), py::arg("sampling_rate") = 100.0, py::arg("component") = 1,
        py::arg("source") = "spectral", py::arg("block_length") = 100, py::arg("span") = 5, py::arg("radius") = 50,
        py::arg("q") = 3, py::arg("band") = py::none(), py::arg("per_block") = false,
        py::arg("threshold") = py::none());

    m.def(
        "scenario",
        [](const std::string& name, int channels_changed, std::uint64_t seed, std::uint64_t stream) {
            auto data = sim::scenario(name, channels_changed, seed, stream);
            return py::make_tuple(data.series.values, data.truth);
        },
        py::arg("name"), py::arg("channels_changed") = 64, py::arg("seed") = 1, py::arg("stream") = 0,
        "Simulated series (T x p) and its true change points in samples.");

    m.def(
        "evaluate",
        [](const std::vector<std::vector<long>>& estimates, const std::vector<long>& truth, int block_length,
           std::optional<double> window_blocks) {
            const auto e = sim::evaluate(estimates, truth, block_length, window_blocks);
            py::dict d;
            d["replicates"] = e.replicates;
            d["detection_rate"] = e.detection_rate;
            d["detection_proportion"] = e.detection_proportion;
            d["mad"] = e.mad;
            d["histogram"] = e.histogram;
            return d;
        },
        py::arg("estimates"), py::arg("truth"), py::arg("block_length") = 100, py::arg("window_blocks") = py::none());
}

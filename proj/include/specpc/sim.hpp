#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "specpc/changepoint.hpp"
#include "specpc/series.hpp"

namespace specpc::sim {

using Rng = std::mt19937_64;

/// Generator for replicate `stream` of experiment `seed`. Distinct
/// (seed, stream) pairs give independent states regardless of the order in
/// which replicates run.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

// ---------------------------------------------------------------- sources

/// AR(2) recursion tuned to an EEG band: S(t) = phi1 S(t-1) + phi2 S(t-2) + eta(t).
struct Ar2BandSpec {
    std::string name;
    double phi1 = 0.0;
    double phi2 = 0.0;
    double low_hz = 0.0;
    double high_hz = 0.0;
};

/// The delta, theta, alpha, beta and gamma sources, in that order.
const std::vector<Ar2BandSpec>& eeg_bands();
const Ar2BandSpec& eeg_band(std::string_view name);

/// True when no root of 1 - phi1 z - phi2 z^2 lies strictly inside the unit
/// circle (up to 1e-9). The delta pair (1.998, -0.998) has a root exactly on
/// the circle and is accepted.
bool ar2_is_stationary(double phi1, double phi2);

/// Resonance frequency arccos(phi1 / (2 sqrt(-phi2))) / (2 pi) * fs for
/// complex roots; 0 when the roots are real.
double ar2_peak_hz(double phi1, double phi2, double sampling_rate);

// Recursions driven by a given innovation sequence, zero initial state.
Eigen::VectorXd ar2_filter(const Eigen::VectorXd& innovations, double phi1, double phi2);
Eigen::VectorXd ma1_filter(const Eigen::VectorXd& innovations, double theta);
Eigen::VectorXd arma11_filter(const Eigen::VectorXd& innovations, double phi, double theta);

constexpr int kDefaultBurnIn = 500;

/// k x length matrix of independent AR(2) sources with N(0, 1) innovations;
/// the first `burn_in` samples are generated and discarded.
Eigen::MatrixXd gen_ar2_sources(std::span<const Ar2BandSpec> bands, int length, int burn_in, Rng& rng);
Eigen::MatrixXd gen_ar2_sources(std::span<const Ar2BandSpec> bands, int length, int burn_in,
                                std::uint64_t seed);

struct MixedSourceParams {
    double arma_phi = 0.5;
    double arma_theta = 0.4;
    double ma_theta = 0.6;
    std::vector<Ar2BandSpec> ar2;  // defaults to the alpha, beta and gamma bands
};

/// Rows: ARMA(1,1), MA(1), then one row per AR(2) member.
Eigen::MatrixXd gen_mixed_sources(int length, int burn_in, Rng& rng, const MixedSourceParams& params = {});
Eigen::MatrixXd gen_mixed_sources(int length, std::uint64_t seed, const MixedSourceParams& params = {});

// ----------------------------------------------------------------- mixing

/// `weights` (p x k) multiplies the sources delayed by `lag` samples.
struct LagTerm {
    int lag = 0;
    Eigen::MatrixXd weights;
};

struct Regime {
    std::vector<LagTerm> terms;
};

/// Piecewise mixing. Regime i applies to samples t with
/// breakpoints[i-1] <= t < breakpoints[i] (0-based sample index).
struct RegimeSpec {
    std::vector<long> breakpoints;
    std::vector<Regime> regimes;  // breakpoints.size() + 1 entries
    double noise_sd = 1.0;

    int max_lag() const;
    int channels() const;
};

/// X(t) = sum_terms M S(t - lag) + eps(t), eps ~ N(0, noise_sd^2 I).
/// `sources` is k x (length + max_lag); column t + max_lag holds S(t).
MultichannelSeries mix_with_lags(const Eigen::MatrixXd& sources, const RegimeSpec& regimes, int length,
                                 Rng& rng, double sampling_rate = 100.0);

/// Lagged two-regime weights: every channel starts with the first pattern
/// and the first `channels_changed` rows switch to the gamma-heavy pattern.
RegimeSpec lagged_regimes(int channels, int channels_changed, std::vector<long> breakpoints);

// -------------------------------------------------------------- scenarios

struct ScenarioData {
    MultichannelSeries series;
    std::vector<long> truth;
};

/// Known names: I, II, III, appendix_var, appendix_cho, figure1.
/// `channels_changed` applies to I, II and III (0..128).
ScenarioData scenario(std::string_view name, int channels_changed, std::uint64_t seed,
                      std::uint64_t stream = 0);

std::vector<std::string> scenario_names();

// ---------------------------------------------------------------- metrics

struct EvalMetrics {
    int replicates = 0;
    double detection_rate = 0.0;
    double detection_proportion = 0.0;
    std::optional<double> mad;
    long matched = 0;
    std::map<long, int> histogram;  // detected sample -> count
};

/// Scores per-replicate estimates against the truth. A true change is
/// matched to its nearest unmatched estimate within `window_blocks` blocks,
/// truths taken in ascending order. Without an explicit window the default
/// is half the smallest gap between true changes, or unbounded for a single
/// change.
EvalMetrics evaluate(const std::vector<std::vector<long>>& estimates, const std::vector<long>& truth,
                     int block_length = 100, std::optional<double> window_blocks = std::nullopt);

struct ExperimentSpec {
    std::string scenario = "I";
    int channels_changed = 64;
    int replicates = 100;
    std::uint64_t seed = 1;
    DetectConfig detect;
};

struct ExperimentResult {
    EvalMetrics metrics;
    std::vector<long> truth;
    std::vector<std::vector<long>> estimates;
    /// Largest per-frequency CUSUM of the first (whole-series) segment.
    std::vector<double> max_frequency_statistic;
    double threshold = 0.0;
};

ExperimentResult run_experiment(const ExperimentSpec& spec);

}  // namespace specpc::sim

#include "specpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "specpc/error.hpp"

namespace specpc::sim {

namespace {

constexpr int kScenarioChannels = 128;
constexpr double kSamplingRate = 100.0;

Eigen::VectorXd draw_normal(Eigen::Index n, Rng& rng, double sd = 1.0) {
    std::normal_distribution<double> normal(0.0, sd);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = normal(rng);
    return out;
}

void check_positive_length(int length) {
    if (length < 1) throw ValidationError("length must be positive, got " + std::to_string(length));
}

void check_burn_in(int burn_in) {
    if (burn_in < 0) throw ValidationError("burn-in must be nonnegative");
}

// Piecewise AR(1) per channel, coefficient switching at `breakpoint`.
MultichannelSeries piecewise_ar1(const Eigen::VectorXd& before, const Eigen::VectorXd& after,
                                 long breakpoint, int length, double noise_sd, Rng& rng) {
    const Eigen::Index p = before.size();
    std::normal_distribution<double> normal(0.0, noise_sd);
    Eigen::VectorXd state = Eigen::VectorXd::Zero(p);
    auto step = [&](const Eigen::VectorXd& coeff) {
        for (Eigen::Index c = 0; c < p; ++c) state(c) = coeff(c) * state(c) + normal(rng);
    };
    for (int t = 0; t < kDefaultBurnIn; ++t) step(before);
    Eigen::MatrixXd x(length, p);
    for (int t = 0; t < length; ++t) {
        step(t < breakpoint ? before : after);
        x.row(t) = state.transpose();
    }
    return MultichannelSeries(std::move(x), kSamplingRate);
}

Regime uniform_regime(int channels, int sources, double weight) {
    Regime r;
    r.terms.push_back({0, Eigen::MatrixXd::Constant(channels, sources, weight)});
    return r;
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

const std::vector<Ar2BandSpec>& eeg_bands() {
    static const std::vector<Ar2BandSpec> bands{
        {"delta", 1.998, -0.998, 0.0, 4.0},   {"theta", 1.9, -0.998, 4.0, 8.0},
        {"alpha", 1.616, -0.998, 8.0, 12.0},  {"beta", -0.617, -0.998, 12.0, 30.0},
        {"gamma", -1.616, -0.998, 30.0, 45.0},
    };
    return bands;
}

const Ar2BandSpec& eeg_band(std::string_view name) {
    for (const auto& b : eeg_bands())
        if (b.name == name) return b;
    throw ValidationError("unknown EEG band '" + std::string(name) + "'");
}

bool ar2_is_stationary(double phi1, double phi2) {
    // Poles are the roots of z^2 - phi1 z - phi2.
    const std::complex<double> disc = std::sqrt(std::complex<double>(phi1 * phi1 + 4.0 * phi2, 0.0));
    const double r1 = std::abs((phi1 + disc) / 2.0);
    const double r2 = std::abs((phi1 - disc) / 2.0);
    return std::max(r1, r2) <= 1.0 + 1e-9;
}

double ar2_peak_hz(double phi1, double phi2, double sampling_rate) {
    if (phi1 * phi1 + 4.0 * phi2 >= 0.0) return 0.0;
    const double angle = std::acos(phi1 / (2.0 * std::sqrt(-phi2)));
    return angle / (2.0 * std::numbers::pi) * sampling_rate;
}

Eigen::VectorXd ar2_filter(const Eigen::VectorXd& innovations, double phi1, double phi2) {
    const Eigen::Index n = innovations.size();
    Eigen::VectorXd s(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        const double s1 = t >= 1 ? s(t - 1) : 0.0;
        const double s2 = t >= 2 ? s(t - 2) : 0.0;
        s(t) = phi1 * s1 + phi2 * s2 + innovations(t);
    }
    return s;
}

Eigen::VectorXd ma1_filter(const Eigen::VectorXd& innovations, double theta) {
    const Eigen::Index n = innovations.size();
    Eigen::VectorXd s(n);
    for (Eigen::Index t = 0; t < n; ++t) s(t) = innovations(t) + (t >= 1 ? theta * innovations(t - 1) : 0.0);
    return s;
}

Eigen::VectorXd arma11_filter(const Eigen::VectorXd& innovations, double phi, double theta) {
    const Eigen::Index n = innovations.size();
    Eigen::VectorXd s(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        // Sum the recursive and moving-average memory first so theta = -phi
        // cancels exactly.
        const double memory = t >= 1 ? phi * s(t - 1) + theta * innovations(t - 1) : 0.0;
        s(t) = memory + innovations(t);
    }
    return s;
}

Eigen::MatrixXd gen_ar2_sources(std::span<const Ar2BandSpec> bands, int length, int burn_in, Rng& rng) {
    check_positive_length(length);
    check_burn_in(burn_in);
    for (const auto& b : bands)
        if (!ar2_is_stationary(b.phi1, b.phi2))
            throw ValidationError("AR(2) coefficients (" + std::to_string(b.phi1) + ", " +
                                  std::to_string(b.phi2) + ") for '" + b.name + "' are not stationary");
    Eigen::MatrixXd out(static_cast<Eigen::Index>(bands.size()), length);
    for (size_t k = 0; k < bands.size(); ++k) {
        const Eigen::VectorXd eta = draw_normal(length + burn_in, rng);
        out.row(static_cast<Eigen::Index>(k)) =
            ar2_filter(eta, bands[k].phi1, bands[k].phi2).tail(length).transpose();
    }
    return out;
}

Eigen::MatrixXd gen_ar2_sources(std::span<const Ar2BandSpec> bands, int length, int burn_in,
                                std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return gen_ar2_sources(bands, length, burn_in, rng);
}

Eigen::MatrixXd gen_mixed_sources(int length, int burn_in, Rng& rng, const MixedSourceParams& params) {
    check_positive_length(length);
    check_burn_in(burn_in);
    if (!(std::abs(params.arma_phi) < 1.0))
        throw ValidationError("ARMA(1,1) autoregressive coefficient must satisfy |phi| < 1");
    if (!(std::abs(params.arma_theta) < 1.0))
        throw ValidationError("ARMA(1,1) moving-average coefficient must satisfy |theta| < 1");
    if (!(std::abs(params.ma_theta) < 1.0))
        throw ValidationError("MA(1) coefficient must satisfy |theta| < 1");
    std::vector<Ar2BandSpec> ar2 = params.ar2;
    if (ar2.empty()) ar2 = {eeg_band("alpha"), eeg_band("beta"), eeg_band("gamma")};

    const Eigen::Index n = length + burn_in;
    Eigen::MatrixXd out(2 + static_cast<Eigen::Index>(ar2.size()), length);
    out.row(0) = arma11_filter(draw_normal(n, rng), params.arma_phi, params.arma_theta).tail(length).transpose();
    out.row(1) = ma1_filter(draw_normal(n, rng), params.ma_theta).tail(length).transpose();
    out.bottomRows(static_cast<Eigen::Index>(ar2.size())) = gen_ar2_sources(ar2, length, burn_in, rng);
    return out;
}

Eigen::MatrixXd gen_mixed_sources(int length, std::uint64_t seed, const MixedSourceParams& params) {
    Rng rng = make_rng(seed);
    return gen_mixed_sources(length, kDefaultBurnIn, rng, params);
}

int RegimeSpec::max_lag() const {
    int lag = 0;
    for (const auto& r : regimes)
        for (const auto& term : r.terms) lag = std::max(lag, term.lag);
    return lag;
}

int RegimeSpec::channels() const {
    return regimes.empty() || regimes.front().terms.empty()
               ? 0
               : static_cast<int>(regimes.front().terms.front().weights.rows());
}

MultichannelSeries mix_with_lags(const Eigen::MatrixXd& sources, const RegimeSpec& spec, int length,
                                 Rng& rng, double sampling_rate) {
    check_positive_length(length);
    if (spec.regimes.size() != spec.breakpoints.size() + 1)
        throw ValidationError("need one regime more than breakpoints");
    for (size_t i = 0; i < spec.breakpoints.size(); ++i) {
        const long b = spec.breakpoints[i];
        if (b <= 0 || b >= length || (i > 0 && b <= spec.breakpoints[i - 1]))
            throw ValidationError("breakpoints must be strictly increasing inside (0, length)");
    }
    const int p = spec.channels();
    if (p < 1) throw ValidationError("regimes need at least one weighted term");
    for (const auto& r : spec.regimes) {
        for (const auto& term : r.terms) {
            if (term.lag < 0) throw ValidationError("lags must be nonnegative");
            if (term.weights.rows() != p || term.weights.cols() != sources.rows())
                throw ValidationError("weight matrices must be " + std::to_string(p) + " x " +
                                      std::to_string(sources.rows()));
            if (!term.weights.allFinite()) throw ValidationError("non-finite mixing weight");
        }
    }
    const int max_lag = spec.max_lag();
    if (sources.cols() < length + max_lag)
        throw ValidationError("lag " + std::to_string(max_lag) + " needs " +
                              std::to_string(length + max_lag) + " source samples, got " +
                              std::to_string(sources.cols()));
    if (spec.noise_sd < 0.0) throw ValidationError("noise standard deviation must be nonnegative");

    Eigen::MatrixXd x(length, p);
    size_t regime = 0;
    for (int t = 0; t < length; ++t) {
        while (regime < spec.breakpoints.size() && t >= spec.breakpoints[regime]) ++regime;
        Eigen::VectorXd row = Eigen::VectorXd::Zero(p);
        for (const auto& term : spec.regimes[regime].terms)
            row.noalias() += term.weights * sources.col(t + max_lag - term.lag);
        x.row(t) = row.transpose();
    }
    if (spec.noise_sd > 0.0) {
        std::normal_distribution<double> normal(0.0, spec.noise_sd);
        for (Eigen::Index c = 0; c < p; ++c)
            for (int t = 0; t < length; ++t) x(t, c) += normal(rng);
    }
    return MultichannelSeries(std::move(x), sampling_rate);
}

RegimeSpec lagged_regimes(int channels, int channels_changed, std::vector<long> breakpoints) {
    if (channels_changed < 0 || channels_changed > channels)
        throw ValidationError("channels_changed must lie in [0, " + std::to_string(channels) + "]");
    constexpr int k = 5;
    Eigen::MatrixXd m10_base = Eigen::MatrixXd::Constant(channels, k, 0.1);
    Eigen::MatrixXd m15_base = Eigen::MatrixXd::Constant(channels, k, 0.1);
    m15_base.col(0).setConstant(0.2);

    Eigen::MatrixXd m10_changed = m10_base;
    Eigen::MatrixXd m15_changed = m15_base;
    for (int c = 0; c < channels_changed; ++c) {
        m10_changed.row(c) << 0.1, 0.1, 0.1, 0.1, 0.9;
        m15_changed.row(c) << 0.3, 0.1, 0.1, 0.1, 0.9;
    }
    const Regime base{{{10, m10_base}, {15, m15_base}}};
    const Regime changed{{{10, m10_changed}, {15, m15_changed}}};

    RegimeSpec spec;
    spec.noise_sd = 1.0;
    for (size_t i = 0; i <= breakpoints.size(); ++i) spec.regimes.push_back(i % 2 == 0 ? base : changed);
    spec.breakpoints = std::move(breakpoints);
    return spec;
}

std::vector<std::string> scenario_names() {
    return {"I", "II", "III", "appendix_var", "appendix_cho", "figure1"};
}

ScenarioData scenario(std::string_view name, int channels_changed, std::uint64_t seed, std::uint64_t stream) {
    Rng rng = make_rng(seed, stream);
    const auto& bands = eeg_bands();

    if (name == "I" || name == "II" || name == "III") {
        const int length = name == "II" ? 4000 : 1000;
        std::vector<long> truth = name == "II" ? std::vector<long>{980, 2150, 3020} : std::vector<long>{550};
        RegimeSpec spec = lagged_regimes(kScenarioChannels, channels_changed, truth);
        const int source_length = length + spec.max_lag();
        const Eigen::MatrixXd sources = name == "III"
                                            ? gen_mixed_sources(source_length, kDefaultBurnIn, rng)
                                            : gen_ar2_sources(bands, source_length, kDefaultBurnIn, rng);
        return {mix_with_lags(sources, spec, length, rng, kSamplingRate), std::move(truth)};
    }
    if (name == "figure1") {
        constexpr int length = 1000;
        constexpr int channels = 20;
        // delta, alpha and gamma at unit sample variance; the delta pair has a
        // unit root and would otherwise swamp every block spectrum.
        const std::vector<Ar2BandSpec> members = {eeg_band("delta"), eeg_band("alpha"), eeg_band("gamma")};
        Eigen::MatrixXd sources = gen_ar2_sources(members, length, kDefaultBurnIn, rng);
        for (Eigen::Index k = 0; k < sources.rows(); ++k) {
            sources.row(k).array() -= sources.row(k).mean();
            sources.row(k) /= std::sqrt(sources.row(k).squaredNorm() / length);
        }
        const int k = static_cast<int>(members.size());
        Regime damped = uniform_regime(channels, k, 1.0);
        damped.terms.front().weights.col(1).setConstant(0.2);  // alpha
        RegimeSpec spec;
        spec.breakpoints = {400, 700};
        spec.regimes = {uniform_regime(channels, k, 1.0), damped, uniform_regime(channels, k, 1.0)};
        spec.noise_sd = 1.0;
        return {mix_with_lags(sources, spec, length, rng, kSamplingRate), spec.breakpoints};
    }
    if (name == "appendix_var") {
        constexpr int channels = 10;
        return {piecewise_ar1(Eigen::VectorXd::Constant(channels, 0.9), Eigen::VectorXd::Constant(channels, -0.9),
                              500, 1000, 0.1, rng),
                {500}};
    }
    if (name == "appendix_cho") {
        constexpr int channels = 100;
        std::uniform_real_distribution<double> alpha(0.5, 0.59);
        std::uniform_real_distribution<double> beta(-0.79, -0.5);
        Eigen::VectorXd before(channels), after(channels);
        for (int c = 0; c < channels; ++c) before(c) = alpha(rng);
        for (int c = 0; c < channels; ++c) after(c) = beta(rng);
        return {piecewise_ar1(before, after, 500, 1000, 2.0, rng), {500}};
    }
    throw ValidationError("unknown scenario '" + std::string(name) +
                          "' (expected I, II, III, appendix_var, appendix_cho or figure1)");
}

EvalMetrics evaluate(const std::vector<std::vector<long>>& estimates, const std::vector<long>& truth,
                     int block_length, std::optional<double> window_blocks) {
    if (truth.empty()) throw ValidationError("evaluation needs at least one true change point");
    if (estimates.empty()) throw ValidationError("evaluation needs at least one replicate");
    if (block_length < 1) throw ValidationError("block length must be positive");
    if (window_blocks && !(*window_blocks >= 1.0)) throw ValidationError("match window must be at least 1 block");

    std::vector<long> sorted_truth = truth;
    std::sort(sorted_truth.begin(), sorted_truth.end());
    double window = std::numeric_limits<double>::infinity();
    if (window_blocks) {
        window = *window_blocks * block_length;
    } else if (sorted_truth.size() > 1) {
        long gap = std::numeric_limits<long>::max();
        for (size_t i = 1; i < sorted_truth.size(); ++i) gap = std::min(gap, sorted_truth[i] - sorted_truth[i - 1]);
        window = gap / 2.0;
    }

    EvalMetrics m;
    m.replicates = static_cast<int>(estimates.size());
    int with_detection = 0;
    double distance_sum = 0.0;
    for (const auto& est : estimates) {
        if (!est.empty()) ++with_detection;
        for (long e : est) ++m.histogram[e];
        std::vector<bool> used(est.size(), false);
        for (long cp : sorted_truth) {
            std::optional<size_t> best;
            for (size_t i = 0; i < est.size(); ++i) {
                if (used[i]) continue;
                const long d = std::abs(est[i] - cp);
                if (d > window) continue;
                if (!best || d < std::abs(est[*best] - cp) ||
                    (d == std::abs(est[*best] - cp) && est[i] < est[*best]))
                    best = i;
            }
            if (best) {
                used[*best] = true;
                distance_sum += static_cast<double>(std::abs(est[*best] - cp));
                ++m.matched;
            }
        }
    }
    m.detection_rate = static_cast<double>(with_detection) / m.replicates;
    m.detection_proportion = static_cast<double>(m.matched) / (static_cast<double>(m.replicates) * sorted_truth.size());
    if (m.matched > 0) m.mad = distance_sum / static_cast<double>(m.matched);
    return m;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    if (spec.replicates < 1) throw ValidationError("replicates must be at least 1");
    ExperimentResult result;
    result.estimates.reserve(static_cast<size_t>(spec.replicates));
    for (int r = 0; r < spec.replicates; ++r) {
        ScenarioData data = scenario(spec.scenario, spec.channels_changed, spec.seed, static_cast<std::uint64_t>(r));
        if (r == 0) result.truth = data.truth;
        const ChangePointReport report = detect(data.series, spec.detect);
        result.threshold = report.threshold;
        result.estimates.push_back(report.change_samples);
        result.max_frequency_statistic.push_back(
            report.traces.empty() ? 0.0 : report.traces.front().per_frequency.maxCoeff());
    }
    result.metrics = evaluate(result.estimates, result.truth, spec.detect.block_length);
    return result;
}

}  // namespace specpc::sim

#pragma once

// Synthetic trivariate series for the driver and indirect topologies.
//
//   x_t = U(-2, 2)                         (+ N(0, a) intrinsic)
//   y_t = c * y_{t-1} + x_{t-1}            (+ N(0, b))
//   z_t = c * z_{t-1} + x_{t-2}            (+ N(0, g))   driver
//   z_t = c * z_{t-1} + y_{t-1}            (+ N(0, g))   indirect
//
// Fixed-sigma and intrinsic modes add the noise inside the recurrences, so it
// reaches downstream series. Extrinsic mode runs the recurrences noise-free
// and adds observer noise afterwards.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

#include "granger_lab/core.hpp"
#include "granger_lab/rng.hpp"

namespace granger_lab {

enum class NoiseKind : std::uint8_t { FixedSigma, IntrinsicSNR, ExtrinsicSNR };

inline std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::FixedSigma: return "fixed";
        case NoiseKind::IntrinsicSNR: return "intrinsic";
        case NoiseKind::ExtrinsicSNR: return "extrinsic";
    }
    return "?";
}

inline NoiseKind parse_noise_kind(std::string_view s) {
    if (s == "fixed") return NoiseKind::FixedSigma;
    if (s == "intrinsic") return NoiseKind::IntrinsicSNR;
    if (s == "extrinsic") return NoiseKind::ExtrinsicSNR;
    throw InvalidArgument("unknown noise kind '" + std::string(s) +
                          "' (expected fixed|intrinsic|extrinsic)");
}

/// Noise standard deviations on X, Y and Z.
struct NoiseConfig {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;

    void validate() const {
        for (double s : {alpha, beta, gamma})
            if (!std::isfinite(s) || s < 0.0)
                throw InvalidArgument("noise standard deviations must be finite and non-negative");
    }
};

struct GeneratorConfig {
    Topology topology = Topology::Driver;
    std::size_t length = 50;
    double ar_coefficient = 0.3;
    NoiseKind noise_kind = NoiseKind::FixedSigma;
    // Standard deviations for FixedSigma, SNR in dB for the other kinds.
    std::array<double, 3> sigmas_or_snrs{0.0, 0.1, 0.5};
    std::size_t burn_in = 100;
    std::uint64_t seed = 0;
    double magnitude_bound = 1e12;

    void validate() const {
        if (length <= kBackboneMaxLag)
            throw InvalidArgument("series length must exceed the generator's maximum lag (2)");
        if (!(std::abs(ar_coefficient) < 1.0))
            throw InvalidArgument("|ar_coefficient| must be < 1");
        for (double v : sigmas_or_snrs)
            if (!std::isfinite(v)) throw InvalidArgument("noise parameters must be finite");
        if (noise_kind == NoiseKind::FixedSigma)
            for (double v : sigmas_or_snrs)
                if (v < 0.0) throw InvalidArgument("fixed noise sigmas must be non-negative");
    }

    static constexpr std::size_t kBackboneMaxLag = 2;
};

/// The fixed noise levels of the criteria-comparison experiment.
inline GeneratorConfig reference_config(Topology topology, std::size_t length, std::uint64_t seed) {
    GeneratorConfig c;
    c.topology = topology;
    c.length = length;
    c.seed = seed;
    return c;
}

struct TrivariateSample {
    TimeSeries x;
    TimeSeries y;
    TimeSeries z;
    TopologyLabel truth;

    const TimeSeries& series(SeriesId id) const {
        switch (id) {
            case SeriesId::X: return x;
            case SeriesId::Y: return y;
            case SeriesId::Z: return z;
        }
        return z;
    }
    std::size_t length() const noexcept { return x.length(); }
};

// --- SNR conversion ---------------------------------------------------------

/// Noise standard deviation giving `snr_db` = 10 log10(signal_variance / sigma^2).
inline double snr_to_sigma(double snr_db, double signal_variance) {
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
        throw InvalidArgument("signal variance must be positive and finite");
    if (!std::isfinite(snr_db)) throw InvalidArgument("SNR must be finite");
    return std::sqrt(signal_variance * std::pow(10.0, -snr_db / 10.0));
}

inline double sigma_to_snr(double sigma, double signal_variance) {
    return 10.0 * std::log10(signal_variance / (sigma * sigma));
}

namespace detail {

struct RawSeries {
    std::vector<double> x, y, z;
};

inline void check_bound(double v, double bound) {
    if (!std::isfinite(v) || std::abs(v) > bound)
        throw GenerationError("generated value exceeds the magnitude bound; the configuration is unstable");
}

// Runs the recurrences for burn_in + length steps and keeps the tail.
// Noise on each series is drawn every step (even when its sigma is zero) so
// the random stream stays aligned across noise levels.
inline RawSeries run_recurrences(Topology topology, std::size_t length, std::size_t burn_in, double ar,
                                 const NoiseConfig& intrinsic, double bound, RandomStream& rng) {
    const std::size_t total = burn_in + length;
    std::vector<double> x(total), y(total), z(total);
    for (std::size_t t = 0; t < total; ++t) {
        x[t] = rng.uniform(-2.0, 2.0) + intrinsic.alpha * rng.normal();
        const double ny = intrinsic.beta * rng.normal();
        const double nz = intrinsic.gamma * rng.normal();
        const double y_prev = t >= 1 ? y[t - 1] : 0.0;
        const double z_prev = t >= 1 ? z[t - 1] : 0.0;
        const double x_lag1 = t >= 1 ? x[t - 1] : 0.0;
        const double x_lag2 = t >= 2 ? x[t - 2] : 0.0;
        y[t] = ar * y_prev + x_lag1 + ny;
        const double input = topology == Topology::Driver ? x_lag2 : y_prev;
        z[t] = ar * z_prev + input + nz;
        check_bound(x[t], bound);
        check_bound(y[t], bound);
        check_bound(z[t], bound);
    }
    auto tail = [&](std::vector<double>& v) {
        return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(burn_in), v.end());
    };
    return RawSeries{tail(x), tail(y), tail(z)};
}

inline TrivariateSample to_sample(RawSeries raw, Topology topology) {
    return TrivariateSample{TimeSeries(std::move(raw.x)), TimeSeries(std::move(raw.y)),
                            TimeSeries(std::move(raw.z)), label_of(topology)};
}

inline double population_variance(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double e : v) ss += (e - mean) * (e - mean);
    return ss / n;
}

}  // namespace detail

// --- signal variance calibration --------------------------------------------

/// Noise-free variance of X, Y and Z for one topology and AR coefficient.
struct SignalVariances {
    std::array<double, 3> values{};
    double operator[](SeriesId id) const { return values[index_of(id)]; }
};

inline constexpr std::size_t kCalibrationLength = 100000;
inline constexpr std::uint64_t kCalibrationSeed = 0x5eed0ca11b7a7e00ULL;

/// Empirical variances from one long noise-free run with a fixed internal seed.
inline SignalVariances calibrate_signal_variances(Topology topology, double ar_coefficient,
                                                  std::size_t calibration_length = kCalibrationLength,
                                                  std::uint64_t calibration_seed = kCalibrationSeed) {
    RandomStream rng(calibration_seed);
    auto raw = detail::run_recurrences(topology, calibration_length, 100, ar_coefficient, NoiseConfig{}, 1e12,
                                       rng);
    return SignalVariances{{detail::population_variance(raw.x), detail::population_variance(raw.y),
                            detail::population_variance(raw.z)}};
}

/// Memoized calibration; the cache is keyed by (topology, AR coefficient).
inline const SignalVariances& cached_signal_variances(Topology topology, double ar_coefficient) {
    static std::mutex mutex;
    static std::map<std::pair<int, double>, SignalVariances> cache;
    std::lock_guard lock(mutex);
    auto key = std::make_pair(static_cast<int>(topology), ar_coefficient);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, calibrate_signal_variances(topology, ar_coefficient)).first;
    return it->second;
}

inline double estimate_signal_variance(const GeneratorConfig& config, SeriesId series) {
    return cached_signal_variances(config.topology, config.ar_coefficient)[series];
}

inline NoiseConfig noise_from_snr(const std::array<double, 3>& snr_db, const SignalVariances& variances) {
    return NoiseConfig{snr_to_sigma(snr_db[0], variances[SeriesId::X]),
                       snr_to_sigma(snr_db[1], variances[SeriesId::Y]),
                       snr_to_sigma(snr_db[2], variances[SeriesId::Z])};
}

// --- generators -------------------------------------------------------------

inline TrivariateSample generate_fixed(const GeneratorConfig& config) {
    config.validate();
    if (config.noise_kind != NoiseKind::FixedSigma)
        throw InvalidArgument("generate_fixed requires a FixedSigma configuration");
    const NoiseConfig noise{config.sigmas_or_snrs[0], config.sigmas_or_snrs[1], config.sigmas_or_snrs[2]};
    RandomStream rng(config.seed);
    return detail::to_sample(detail::run_recurrences(config.topology, config.length, config.burn_in,
                                                     config.ar_coefficient, noise, config.magnitude_bound, rng),
                             config.topology);
}

inline TrivariateSample generate_intrinsic(const GeneratorConfig& config, const SignalVariances& variances) {
    config.validate();
    if (config.noise_kind != NoiseKind::IntrinsicSNR)
        throw InvalidArgument("generate_intrinsic requires an IntrinsicSNR configuration");
    const NoiseConfig noise = noise_from_snr(config.sigmas_or_snrs, variances);
    RandomStream rng(config.seed);
    return detail::to_sample(detail::run_recurrences(config.topology, config.length, config.burn_in,
                                                     config.ar_coefficient, noise, config.magnitude_bound, rng),
                             config.topology);
}

inline TrivariateSample generate_intrinsic(const GeneratorConfig& config) {
    return generate_intrinsic(config, cached_signal_variances(config.topology, config.ar_coefficient));
}

/// Observer noise with explicit standard deviations. The noise-free system is
/// drawn first, so it does not depend on `noise`.
inline TrivariateSample generate_observed(const GeneratorConfig& config, const NoiseConfig& noise) {
    config.validate();
    noise.validate();
    RandomStream rng(config.seed);
    auto raw = detail::run_recurrences(config.topology, config.length, config.burn_in, config.ar_coefficient,
                                       NoiseConfig{}, config.magnitude_bound, rng);
    RandomStream observer(splitmix64(config.seed ^ 0x0b5e7e70b5e7e700ULL));
    const std::array<double, 3> sd{noise.alpha, noise.beta, noise.gamma};
    std::array<std::vector<double>*, 3> series{&raw.x, &raw.y, &raw.z};
    for (std::size_t s = 0; s < 3; ++s)
        for (double& v : *series[s]) {
            v += sd[s] * observer.normal();
            detail::check_bound(v, config.magnitude_bound);
        }
    return detail::to_sample(std::move(raw), config.topology);
}

inline TrivariateSample generate_extrinsic(const GeneratorConfig& config, const SignalVariances& variances) {
    if (config.noise_kind != NoiseKind::ExtrinsicSNR)
        throw InvalidArgument("generate_extrinsic requires an ExtrinsicSNR configuration");
    return generate_observed(config, noise_from_snr(config.sigmas_or_snrs, variances));
}

inline TrivariateSample generate_extrinsic(const GeneratorConfig& config) {
    return generate_extrinsic(config, cached_signal_variances(config.topology, config.ar_coefficient));
}

/// Dispatches on config.noise_kind.
inline TrivariateSample generate(const GeneratorConfig& config, const SignalVariances& variances) {
    switch (config.noise_kind) {
        case NoiseKind::FixedSigma: return generate_fixed(config);
        case NoiseKind::IntrinsicSNR: return generate_intrinsic(config, variances);
        case NoiseKind::ExtrinsicSNR: return generate_extrinsic(config, variances);
    }
    throw InvalidArgument("unknown noise kind");
}

inline TrivariateSample generate(const GeneratorConfig& config) {
    if (config.noise_kind == NoiseKind::FixedSigma) return generate_fixed(config);
    return generate(config, cached_signal_variances(config.topology, config.ar_coefficient));
}

}  // namespace granger_lab

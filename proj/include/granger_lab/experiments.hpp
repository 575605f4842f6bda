#pragma once

// Monte Carlo orchestration: rate estimation, significance and sample-size
// sweeps, and SNR phase spaces.
//
// Every iteration draws its sample from derive_seed(master, cell, iteration),
// and per-iteration outcomes are stored by index before being tallied in
// order, so results do not depend on the number of workers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "granger_lab/core.hpp"
#include "granger_lab/criteria.hpp"
#include "granger_lab/datagen.hpp"
#include "granger_lab/granger.hpp"
#include "granger_lab/rng.hpp"

namespace granger_lab {

// --- worker pool -------------------------------------------------------------

/// Worker count from GRANGER_LAB_THREADS, else the hardware concurrency.
inline std::size_t default_workers() {
    if (const char* env = std::getenv("GRANGER_LAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on up to `workers` threads. The first
/// exception thrown by any body is rethrown after all threads join.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// --- rate estimation ------------------------------------------------------------

/// One (criterion, significance) pair to decide with.
struct Evaluation {
    Criterion criterion = Criterion::Wald;
    double significance = 0.05;
};

struct MonteCarloConfig {
    GeneratorConfig generator;
    GrangerConfig granger;
    std::size_t iterations = 1000;
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;
    // Fraction of rank-deficient iterations above which the run aborts.
    double max_failure_fraction = 0.01;
};

inline void tally(RateEstimate& r, Topology truth, EdgeSet inferred) {
    const auto keys = key_links(truth);
    ++r.iterations;
    if (inferred.contains(keys.spurious)) ++r.spurious_count;
    if (!inferred.contains(keys.unidentified)) ++r.unidentified_count;
    for (std::size_t i = 0; i < 3; ++i)
        if (inferred.contains(kForwardLinks[i])) ++r.link_counts[i];
    const auto c = classify(TopologyLabel{inferred}, label_of(truth));
    if (c.spurious) ++r.topology_spurious_count;
    if (c.unidentified) ++r.topology_unidentified_count;
    if (!c.spurious && !c.unidentified) ++r.exact_match_count;
}

/// Rates for several evaluations over one shared set of samples.
/// `cell` selects an independent family of per-iteration seeds.
inline std::vector<RateEstimate> estimate_rates_multi(const MonteCarloConfig& mc,
                                                      const std::vector<Evaluation>& evaluations,
                                                      const SignalVariances& variances, std::uint64_t cell = 0) {
    if (mc.iterations < 1) throw InvalidArgument("iterations must be >= 1");
    if (evaluations.empty()) throw InvalidArgument("at least one evaluation is required");
    mc.generator.validate();
    mc.granger.validate();
    for (const auto& ev : evaluations)
        if (!(ev.significance > 0.0 && ev.significance < 1.0))
            throw InvalidArgument("significance level must lie strictly between 0 and 1");

    constexpr std::uint8_t kFailed = 0xff;
    const std::size_t n_eval = evaluations.size();
    std::vector<std::uint8_t> outcomes(mc.iterations * n_eval, 0);

    parallel_for(mc.iterations, mc.workers, [&](std::size_t i) {
        GeneratorConfig g = mc.generator;
        g.seed = derive_seed(mc.master_seed, cell, i);
        const TrivariateSample sample = generate(g, variances);
        std::uint8_t* row = outcomes.data() + i * n_eval;
        try {
            const LinkEvidence e = gather_evidence(sample, mc.granger, true);
            for (std::size_t k = 0; k < n_eval; ++k)
                row[k] = infer_from_evidence(e, evaluations[k].criterion, evaluations[k].significance,
                                             mc.granger.always_conditional)
                             .topology.edges()
                             .bits();
        } catch (const RankDeficient&) {
            std::fill(row, row + n_eval, kFailed);
        }
    });

    std::vector<RateEstimate> rates(n_eval);
    for (std::size_t i = 0; i < mc.iterations; ++i) {
        const std::uint8_t* row = outcomes.data() + i * n_eval;
        for (std::size_t k = 0; k < n_eval; ++k) {
            if (row[k] == kFailed) {
                ++rates[k].failed_iterations;
                continue;
            }
            EdgeSet edges;
            for (std::size_t s = 0; s < 3; ++s)
                if ((row[k] >> s) & 1u) edges.insert(kForwardLinks[s]);
            tally(rates[k], mc.generator.topology, edges);
        }
    }
    const auto failed = rates.front().failed_iterations;
    if (static_cast<double>(failed) > mc.max_failure_fraction * static_cast<double>(mc.iterations))
        throw Error(std::to_string(failed) + " of " + std::to_string(mc.iterations) +
                    " iterations produced rank-deficient fits; the configuration is degenerate");
    return rates;
}

inline SignalVariances variances_for(const GeneratorConfig& g) {
    if (g.noise_kind == NoiseKind::FixedSigma) return SignalVariances{{1.0, 1.0, 1.0}};
    return cached_signal_variances(g.topology, g.ar_coefficient);
}

inline RateEstimate estimate_rates(const MonteCarloConfig& mc, std::uint64_t cell = 0) {
    return estimate_rates_multi(mc, {Evaluation{mc.granger.criterion, mc.granger.significance}},
                                variances_for(mc.generator), cell)
        .front();
}

// --- sweeps ---------------------------------------------------------------------

inline constexpr std::array<Criterion, 3> kPresetCriteria{Criterion::LR, Criterion::Wald, Criterion::Rao};

struct SweepResult {
    std::vector<double> axis;
    std::vector<Criterion> criteria;
    // rates[c][i]: criterion c at axis value i.
    std::vector<std::vector<RateEstimate>> rates;

    const RateEstimate& at(Criterion c, std::size_t i) const {
        for (std::size_t k = 0; k < criteria.size(); ++k)
            if (criteria[k] == c) return rates[k][i];
        throw InvalidArgument("criterion " + to_string(c) + " is not part of this sweep");
    }
};

/// Index of the axis value whose (unidentified, spurious) point lies closest
/// to (0, 0); the first such index on ties.
inline std::size_t closest_to_origin(const std::vector<RateEstimate>& rates) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        const double d = std::hypot(rates[i].unidentified_rate(), rates[i].spurious_rate());
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

struct SignificanceSweepConfig {
    Topology topology = Topology::Driver;
    std::size_t n_points = 50;
    std::vector<double> alphas;
    std::vector<Criterion> criteria{kPresetCriteria.begin(), kPresetCriteria.end()};
    std::size_t iterations = 1000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    LagSpec lags{2, {2, 2}};
};

struct SignificanceSweep {
    SweepResult result;
    // Optimal significance level per criterion, same order as result.criteria.
    std::vector<double> optimal_alpha;
};

/// All significance levels and criteria are decided on the same samples.
inline SignificanceSweep sweep_significance(const SignificanceSweepConfig& cfg) {
    if (cfg.alphas.empty()) throw InvalidArgument("significance grid is empty");
    if (cfg.criteria.empty()) throw InvalidArgument("no criteria selected");
    for (double a : cfg.alphas)
        if (!(a > 0.0 && a < 1.0)) throw InvalidArgument("significance levels must lie in (0, 1)");

    MonteCarloConfig mc;
    mc.generator = reference_config(cfg.topology, cfg.n_points, 0);
    mc.granger.lags = cfg.lags;
    mc.iterations = cfg.iterations;
    mc.master_seed = cfg.seed;
    mc.workers = cfg.workers;

    std::vector<Evaluation> evals;
    for (auto c : cfg.criteria)
        for (double a : cfg.alphas) evals.push_back({c, a});
    const auto flat = estimate_rates_multi(mc, evals, variances_for(mc.generator));

    SignificanceSweep s;
    s.result.axis = cfg.alphas;
    s.result.criteria = cfg.criteria;
    for (std::size_t c = 0; c < cfg.criteria.size(); ++c) {
        const auto first = flat.begin() + static_cast<std::ptrdiff_t>(c * cfg.alphas.size());
        s.result.rates.emplace_back(first, first + static_cast<std::ptrdiff_t>(cfg.alphas.size()));
        s.optimal_alpha.push_back(cfg.alphas[closest_to_origin(s.result.rates.back())]);
    }
    return s;
}

struct SampleSizeSweepConfig {
    Topology topology = Topology::Driver;
    double alpha = 0.3;
    std::vector<std::size_t> sizes;
    std::vector<Criterion> criteria{kPresetCriteria.begin(), kPresetCriteria.end()};
    std::size_t cases = 1000;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    LagSpec lags{2, {2, 2}};
};

struct PairComparison {
    std::size_t size_index = 0;
    Criterion a = Criterion::LR;
    Criterion b = Criterion::Wald;
    CriteriaComparison comparison;
};

struct SampleSizeSweep {
    SweepResult result;
    std::vector<PairComparison> comparisons;

    const PairComparison& compare(std::size_t size_index, Criterion a, Criterion b) const {
        for (const auto& p : comparisons)
            if (p.size_index == size_index && ((p.a == a && p.b == b) || (p.a == b && p.b == a))) return p;
        throw InvalidArgument("no comparison recorded for that pair");
    }
};

/// Each size draws its own family of samples (cell = size index); criteria
/// share the samples within a size.
inline SampleSizeSweep sweep_sample_size(const SampleSizeSweepConfig& cfg) {
    if (cfg.sizes.empty()) throw InvalidArgument("sample-size grid is empty");
    if (cfg.criteria.empty()) throw InvalidArgument("no criteria selected");
    for (std::size_t i = 1; i < cfg.sizes.size(); ++i)
        if (cfg.sizes[i] <= cfg.sizes[i - 1]) throw InvalidArgument("sample sizes must be strictly increasing");

    SampleSizeSweep s;
    s.result.criteria = cfg.criteria;
    s.result.rates.assign(cfg.criteria.size(), {});
    std::vector<Evaluation> evals;
    for (auto c : cfg.criteria) evals.push_back({c, cfg.alpha});

    for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
        MonteCarloConfig mc;
        mc.generator = reference_config(cfg.topology, cfg.sizes[i], 0);
        mc.granger.lags = cfg.lags;
        mc.iterations = cfg.cases;
        mc.master_seed = cfg.seed;
        mc.workers = cfg.workers;
        const auto rates = estimate_rates_multi(mc, evals, variances_for(mc.generator), i);
        s.result.axis.push_back(static_cast<double>(cfg.sizes[i]));
        for (std::size_t c = 0; c < cfg.criteria.size(); ++c) s.result.rates[c].push_back(rates[c]);
        for (std::size_t a = 0; a < cfg.criteria.size(); ++a)
            for (std::size_t b = a + 1; b < cfg.criteria.size(); ++b)
                s.comparisons.push_back(
                    {i, cfg.criteria[a], cfg.criteria[b], compare_criteria(rates[a], rates[b])});
    }
    return s;
}

// --- phase spaces ----------------------------------------------------------------

/// Inclusive uniform grid lo, lo+step, ..., hi, snapped to 12 significant digits.
inline std::vector<double> uniform_grid(double lo, double hi, double step) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step))
        throw InvalidArgument("grid bounds must be finite");
    if (hi < lo) throw InvalidArgument("grid upper bound is below the lower bound");
    if (hi == lo) return {lo};
    if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
    const double span = (hi - lo) / step;
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    std::vector<double> g(count);
    char buf[32];
    for (std::size_t i = 0; i < count; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", lo + static_cast<double>(i) * step);
        g[i] = std::strtod(buf, nullptr);
    }
    return g;
}

inline std::vector<double> default_snr_grid(std::size_t points = 17) {
    return uniform_grid(-40.0, 40.0, 80.0 / static_cast<double>(points - 1));
}

struct PhaseSpaceConfig {
    NoiseKind noise = NoiseKind::IntrinsicSNR;
    Topology topology = Topology::Driver;
    std::size_t n = 300;
    double alpha = 0.05;
    Criterion criterion = Criterion::Wald;
    std::size_t iterations = 500;
    std::array<std::vector<double>, 3> grids{default_snr_grid(), default_snr_grid(), default_snr_grid()};
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    LagSpec lags{2, {2, 2}};
    double ar_coefficient = 0.3;

    std::size_t cell_count() const { return grids[0].size() * grids[1].size() * grids[2].size(); }
    std::size_t cell_index(std::size_t ix, std::size_t iy, std::size_t iz) const {
        return (ix * grids[1].size() + iy) * grids[2].size() + iz;
    }
};

struct PhaseGrid {
    PhaseSpaceConfig config;
    std::vector<RateEstimate> cells;  // indexed by config.cell_index

    const RateEstimate& at(std::size_t ix, std::size_t iy, std::size_t iz) const {
        return cells.at(config.cell_index(ix, iy, iz));
    }
};

/// Callback after each finished cell (for checkpointing) and previously
/// completed cells to reuse instead of recomputing.
struct PhaseSpaceHooks {
    std::function<void(std::size_t cell, const std::array<double, 3>& snr, const RateEstimate&)> on_cell;
    const std::map<std::size_t, RateEstimate>* completed = nullptr;
};

inline PhaseGrid phase_space(const PhaseSpaceConfig& cfg, const PhaseSpaceHooks& hooks = {}) {
    if (cfg.noise == NoiseKind::FixedSigma) throw InvalidArgument("phase spaces need an SNR noise kind");
    for (const auto& g : cfg.grids) {
        if (g.empty()) throw InvalidArgument("SNR grid is empty");
        for (double v : g)
            if (v < -40.0 - 1e-9 || v > 40.0 + 1e-9) throw InvalidArgument("SNR grid must lie within [-40, 40] dB");
    }
    const SignalVariances variances = cached_signal_variances(cfg.topology, cfg.ar_coefficient);

    PhaseGrid grid;
    grid.config = cfg;
    grid.cells.resize(cfg.cell_count());
    for (std::size_t ix = 0; ix < cfg.grids[0].size(); ++ix)
        for (std::size_t iy = 0; iy < cfg.grids[1].size(); ++iy)
            for (std::size_t iz = 0; iz < cfg.grids[2].size(); ++iz) {
                const std::size_t cell = cfg.cell_index(ix, iy, iz);
                if (hooks.completed) {
                    if (auto it = hooks.completed->find(cell); it != hooks.completed->end()) {
                        grid.cells[cell] = it->second;
                        continue;
                    }
                }
                MonteCarloConfig mc;
                mc.generator.topology = cfg.topology;
                mc.generator.length = cfg.n;
                mc.generator.ar_coefficient = cfg.ar_coefficient;
                mc.generator.noise_kind = cfg.noise;
                const std::array<double, 3> snr{cfg.grids[0][ix], cfg.grids[1][iy], cfg.grids[2][iz]};
                mc.generator.sigmas_or_snrs = snr;
                mc.granger.lags = cfg.lags;
                mc.iterations = cfg.iterations;
                mc.master_seed = cfg.seed;
                mc.workers = cfg.workers;
                grid.cells[cell] =
                    estimate_rates_multi(mc, {Evaluation{cfg.criterion, cfg.alpha}}, variances, cell).front();
                if (hooks.on_cell) hooks.on_cell(cell, snr, grid.cells[cell]);
            }
    return grid;
}

enum class RateKind : std::uint8_t { Spurious, Unidentified, LinkXZ, LinkYZ };

inline double rate_of(const RateEstimate& r, RateKind kind) {
    switch (kind) {
        case RateKind::Spurious: return r.spurious_rate();
        case RateKind::Unidentified: return r.unidentified_rate();
        case RateKind::LinkXZ: return r.link_rate(kXZ);
        case RateKind::LinkYZ: return r.link_rate(kYZ);
    }
    return 0.0;
}

inline RateKind parse_rate_kind(std::string_view s) {
    if (s == "spurious") return RateKind::Spurious;
    if (s == "unidentified") return RateKind::Unidentified;
    if (s == "xz") return RateKind::LinkXZ;
    if (s == "yz") return RateKind::LinkYZ;
    throw InvalidArgument("unknown rate '" + std::string(s) + "' (expected spurious|unidentified|xz|yz)");
}

/// A 2-D slice through the phase space. Rows follow the first free axis and
/// columns the second, both ascending.
struct Plane {
    SeriesId fixed_axis = SeriesId::Z;
    double fixed_value = 0.0;
    SeriesId row_axis = SeriesId::X;
    SeriesId col_axis = SeriesId::Y;
    std::vector<double> row_values;
    std::vector<double> col_values;
    std::vector<double> values;  // row-major

    double at(std::size_t r, std::size_t c) const { return values.at(r * col_values.size() + c); }
};

inline std::size_t grid_position(const std::vector<double>& axis, double value) {
    for (std::size_t i = 0; i < axis.size(); ++i)
        if (std::abs(axis[i] - value) <= 1e-9 * std::max(1.0, std::abs(value))) return i;
    throw OffGrid("value " + std::to_string(value) + " dB is not on the grid");
}

inline Plane extract_plane(const PhaseGrid& grid, SeriesId axis, double value_db, RateKind kind) {
    const auto& g = grid.config.grids;
    const std::size_t fixed = grid_position(g[index_of(axis)], value_db);

    Plane p;
    p.fixed_axis = axis;
    p.fixed_value = g[index_of(axis)][fixed];
    std::vector<SeriesId> free;
    for (auto s : kAllSeries)
        if (s != axis) free.push_back(s);
    p.row_axis = free[0];
    p.col_axis = free[1];
    p.row_values = g[index_of(p.row_axis)];
    p.col_values = g[index_of(p.col_axis)];
    p.values.reserve(p.row_values.size() * p.col_values.size());
    for (std::size_t r = 0; r < p.row_values.size(); ++r)
        for (std::size_t c = 0; c < p.col_values.size(); ++c) {
            std::array<std::size_t, 3> idx{};
            idx[index_of(axis)] = fixed;
            idx[index_of(p.row_axis)] = r;
            idx[index_of(p.col_axis)] = c;
            p.values.push_back(rate_of(grid.at(idx[0], idx[1], idx[2]), kind));
        }
    return p;
}

}  // namespace granger_lab

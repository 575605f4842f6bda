#pragma once

// Bivariate Granger tests and the two-step trivariate procedure.
//
// Step one tests every forward pair. If it returns the complete topology,
// step two re-tests X->Z and Y->Z conditioning on the third series and
// replaces those two edges with the conditional decisions.

#include <array>
#include <optional>
#include <vector>

#include "granger_lab/core.hpp"
#include "granger_lab/criteria.hpp"
#include "granger_lab/datagen.hpp"
#include "granger_lab/regress.hpp"

namespace granger_lab {

struct GrangerConfig {
    // target_lags: the effect's own look-back. predictor_lags[0] is the look-back
    // of the bivariate cause and of Y in the conditional model; predictor_lags[1]
    // (defaults to [0]) is the look-back of X in the conditional model.
    LagSpec lags{2, {2, 2}};
    Criterion criterion = Criterion::Wald;
    double significance = 0.05;
    // Run the conditional tests on every sample instead of only after a
    // complete bivariate scan.
    bool always_conditional = false;

    std::size_t cause_lags() const { return lags.predictor_lags.at(0); }
    std::size_t x_lags() const {
        return lags.predictor_lags.size() > 1 ? lags.predictor_lags[1] : lags.predictor_lags.at(0);
    }

    void validate() const {
        lags.validate();
        if (lags.predictor_lags.empty()) throw InvalidArgument("at least one predictor lag count is required");
        if (!(significance > 0.0 && significance < 1.0))
            throw InvalidArgument("significance level must lie strictly between 0 and 1");
    }
};

/// Restricted (effect's own lags) and unrestricted (plus cause's lags) fits.
inline NestedFits bivariate_fits(const TimeSeries& cause, const TimeSeries& effect, const GrangerConfig& config) {
    config.validate();
    if (cause.length() != effect.length()) throw InvalidArgument("cause and effect must have the same length");
    const LagSpec own{config.lags.target_lags, {}};
    const LagSpec full{config.lags.target_lags, {config.cause_lags()}};
    const std::size_t window = full.max_lag();
    const std::array<const TimeSeries*, 1> with_cause{&cause};
    return NestedFits{ols_fit(build_design(effect, {}, own, window)),
                      ols_fit(build_design(effect, with_cause, full, window))};
}

inline LinkDecision bivariate_test(const TimeSeries& cause, const TimeSeries& effect, const GrangerConfig& config,
                                   Link link = kXY) {
    return decide(link, statistic(config.criterion, bivariate_fits(cause, effect, config)), config.significance);
}

/// Conditional fits for `tested_cause` -> Z: Z's lags + Y's lags + X's lags
/// against the same model without the tested cause.
inline NestedFits trivariate_fits(const TrivariateSample& sample, SeriesId tested_cause,
                                  const GrangerConfig& config) {
    config.validate();
    if (tested_cause == SeriesId::Z) throw InvalidArgument("the conditional test applies to X->Z or Y->Z");
    const std::size_t y_lags = config.cause_lags();
    const std::size_t x_lags = config.x_lags();
    const LagSpec full{config.lags.target_lags, {y_lags, x_lags}};
    const std::size_t window = full.max_lag();

    const std::array<const TimeSeries*, 2> both{&sample.y, &sample.x};
    const std::array<const TimeSeries*, 1> other{tested_cause == SeriesId::X ? &sample.y : &sample.x};
    const LagSpec reduced{config.lags.target_lags, {tested_cause == SeriesId::X ? y_lags : x_lags}};
    return NestedFits{ols_fit(build_design(sample.z, other, reduced, window)),
                      ols_fit(build_design(sample.z, both, full, window))};
}

inline LinkDecision trivariate_test(const TrivariateSample& sample, SeriesId tested_cause,
                                    const GrangerConfig& config) {
    return decide(Link{tested_cause, SeriesId::Z},
                  statistic(config.criterion, trivariate_fits(sample, tested_cause, config)),
                  config.significance);
}

// --- evidence: every fit the procedure may need ------------------------------

/// Fits for all six bivariate directions and, optionally, both conditional
/// tests. Decisions for any criterion and significance level follow without
/// refitting.
struct LinkEvidence {
    std::array<NestedFits, 3> forward;  // X->Y, X->Z, Y->Z
    std::array<NestedFits, 3> reverse;  // Y->X, Z->X, Z->Y
    std::optional<NestedFits> conditional_xz;
    std::optional<NestedFits> conditional_yz;
};

inline LinkEvidence gather_evidence(const TrivariateSample& sample, const GrangerConfig& config,
                                    bool with_conditional = true) {
    LinkEvidence e;
    for (std::size_t i = 0; i < 3; ++i) {
        const Link f = kForwardLinks[i];
        const Link r = kReverseLinks[i];
        e.forward[i] = bivariate_fits(sample.series(f.cause), sample.series(f.effect), config);
        e.reverse[i] = bivariate_fits(sample.series(r.cause), sample.series(r.effect), config);
    }
    if (with_conditional) {
        e.conditional_xz = trivariate_fits(sample, SeriesId::X, config);
        e.conditional_yz = trivariate_fits(sample, SeriesId::Y, config);
    }
    return e;
}

struct ScanResult {
    EdgeSet edges;
    std::array<LinkDecision, 3> forward;
    std::array<LinkDecision, 3> reverse;
};

struct InferenceResult {
    TopologyLabel topology;
    ScanResult scan;
    bool conditional_step_run = false;
    std::optional<LinkDecision> conditional_xz;
    std::optional<LinkDecision> conditional_yz;
};

inline ScanResult scan_from_evidence(const LinkEvidence& e, Criterion criterion, double significance) {
    ScanResult s;
    for (std::size_t i = 0; i < 3; ++i) {
        s.forward[i] = decide(kForwardLinks[i], statistic(criterion, e.forward[i]), significance);
        s.reverse[i] = decide(kReverseLinks[i], statistic(criterion, e.reverse[i]), significance);
        s.edges.set(kForwardLinks[i], s.forward[i].decided_causal);
    }
    return s;
}

inline InferenceResult infer_from_evidence(const LinkEvidence& e, Criterion criterion, double significance,
                                           bool always_conditional = false) {
    InferenceResult r;
    r.scan = scan_from_evidence(e, criterion, significance);
    EdgeSet edges = r.scan.edges;
    if (always_conditional || edges == kCompleteEdges) {
        if (!e.conditional_xz || !e.conditional_yz)
            throw InvalidArgument("evidence lacks the conditional fits needed for step two");
        r.conditional_step_run = true;
        r.conditional_xz = decide(kXZ, statistic(criterion, *e.conditional_xz), significance);
        r.conditional_yz = decide(kYZ, statistic(criterion, *e.conditional_yz), significance);
        edges.set(kXZ, r.conditional_xz->decided_causal);
        edges.set(kYZ, r.conditional_yz->decided_causal);
    }
    r.topology = TopologyLabel{edges};
    return r;
}

/// Tests all forward pairs (reverse directions are reported alongside).
inline ScanResult bivariate_scan(const TrivariateSample& sample, const GrangerConfig& config) {
    return scan_from_evidence(gather_evidence(sample, config, false), config.criterion, config.significance);
}

inline InferenceResult infer_topology_detailed(const TrivariateSample& sample, const GrangerConfig& config) {
    LinkEvidence e = gather_evidence(sample, config, false);
    ScanResult scan = scan_from_evidence(e, config.criterion, config.significance);
    if (config.always_conditional || scan.edges == kCompleteEdges) {
        e.conditional_xz = trivariate_fits(sample, SeriesId::X, config);
        e.conditional_yz = trivariate_fits(sample, SeriesId::Y, config);
    }
    return infer_from_evidence(e, config.criterion, config.significance, config.always_conditional);
}

inline TopologyLabel infer_topology(const TrivariateSample& sample, const GrangerConfig& config) {
    return infer_topology_detailed(sample, config).topology;
}

}  // namespace granger_lab

#pragma once

// Test criteria for nested Gaussian linear models, computed from the residual
// sums of squares of a restricted/unrestricted pair. With n observations,
// q restrictions, k unrestricted parameters and x = (rss_r - rss_u) / rss_u:
//
//   LR   = n ln(1 + x)                  ~ chi2(q)
//   Wald = n x                          ~ chi2(q)
//   LM   = n x / (1 + x)                ~ chi2(q)
//   Rao  = (x / q) (n - k)              ~ F(q, n - k)
//
// ln(1+x) <= x and x/(1+x) <= ln(1+x) give Wald >= LR >= LM.

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "granger_lab/core.hpp"
#include "granger_lab/regress.hpp"

namespace granger_lab {

/// Survival function of the chi-squared distribution.
inline double chi2_sf(double statistic, std::size_t dof) {
    if (dof == 0) throw InvalidArgument("chi-squared degrees of freedom must be positive");
    if (std::isnan(statistic)) throw InvalidArgument("statistic is NaN");
    if (statistic <= 0.0) return 1.0;
    if (std::isinf(statistic)) return 0.0;
    if (dof == 2) return std::exp(-0.5 * statistic);
    return boost::math::gamma_q(0.5 * static_cast<double>(dof), 0.5 * statistic);
}

/// Survival function of the F distribution via the regularized incomplete beta:
/// P(F > f) = I_{d2 / (d2 + d1 f)}(d2 / 2, d1 / 2).
inline double f_sf(double statistic, std::size_t dof1, std::size_t dof2) {
    if (dof1 == 0 || dof2 == 0) throw InvalidArgument("F degrees of freedom must be positive");
    if (std::isnan(statistic)) throw InvalidArgument("statistic is NaN");
    if (statistic <= 0.0) return 1.0;
    if (std::isinf(statistic)) return 0.0;
    const double d1 = static_cast<double>(dof1);
    const double d2 = static_cast<double>(dof2);
    const double d1f = d1 * statistic;
    // Use the complementary form when d1 f dominates so the argument stays accurate.
    if (d1f > d2) return boost::math::ibeta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1f));
    return boost::math::ibetac(0.5 * d1, 0.5 * d2, d1f / (d2 + d1f));
}

// rss_u at or below this fraction of the response's sum of squares is a perfect fit.
inline constexpr double kPerfectFitTolerance = 1e-20;

inline bool is_perfect_fit(const FitResult& fit) {
    return fit.rss <= kPerfectFitTolerance * fit.tss;
}

/// Statistic and p-value for H0: the restricted coefficients are all zero.
inline TestOutcome statistic(Criterion criterion, const FitResult& restricted, const FitResult& unrestricted) {
    if (restricted.n_obs != unrestricted.n_obs)
        throw InvalidPair("restricted and unrestricted fits must share the observation window");
    if (restricted.n_params >= unrestricted.n_params)
        throw InvalidPair("restricted model must have fewer parameters than the unrestricted model");

    const std::size_t n = unrestricted.n_obs;
    const std::size_t q = unrestricted.n_params - restricted.n_params;
    const std::size_t k = unrestricted.n_params;
    const double nd = static_cast<double>(n);

    TestOutcome out;
    out.criterion = criterion;
    out.dof_numerator = q;
    if (criterion == Criterion::Rao) out.dof_denominator = n - k;

    if (is_perfect_fit(unrestricted)) {
        // Limit of every statistic as rss_u -> 0.
        out.degenerate = true;
        const bool restriction_costs = restricted.rss > kPerfectFitTolerance * restricted.tss;
        out.statistic = restriction_costs ? std::numeric_limits<double>::infinity() : 0.0;
        out.p_value = restriction_costs ? 0.0 : 1.0;
        return out;
    }

    // Nesting guarantees rss_r >= rss_u; clamp round-off.
    const double x = std::max(0.0, (restricted.rss - unrestricted.rss) / unrestricted.rss);
    switch (criterion) {
        case Criterion::LR:
            out.statistic = nd * std::log1p(x);
            out.p_value = chi2_sf(out.statistic, q);
            break;
        case Criterion::Wald:
            out.statistic = nd * x;
            out.p_value = chi2_sf(out.statistic, q);
            break;
        case Criterion::LM:
            out.statistic = nd * x / (1.0 + x);
            out.p_value = chi2_sf(out.statistic, q);
            break;
        case Criterion::Rao:
            out.statistic = x / static_cast<double>(q) * static_cast<double>(n - k);
            out.p_value = f_sf(out.statistic, q, n - k);
            break;
    }
    return out;
}

inline TestOutcome statistic(Criterion criterion, const NestedFits& fits) {
    return statistic(criterion, fits.restricted, fits.unrestricted);
}

// --- comparing Monte Carlo rates --------------------------------------------

struct ProportionTest {
    double z = 0.0;
    double p_value = 1.0;
    bool different = false;
};

/// Two-sided two-proportion z-test with pooled variance.
inline ProportionTest two_proportion_test(std::size_t count_a, std::size_t n_a, std::size_t count_b,
                                          std::size_t n_b, double level) {
    if (n_a == 0 || n_b == 0) throw InvalidArgument("proportion test needs non-zero sample sizes");
    const double na = static_cast<double>(n_a);
    const double nb = static_cast<double>(n_b);
    const double pa = static_cast<double>(count_a) / na;
    const double pb = static_cast<double>(count_b) / nb;
    const double pooled = static_cast<double>(count_a + count_b) / (na + nb);
    const double var = pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb);
    ProportionTest t;
    if (var <= 0.0) return t;  // both proportions 0 or both 1
    t.z = (pa - pb) / std::sqrt(var);
    t.p_value = std::erfc(std::abs(t.z) / std::numbers::sqrt2);
    t.different = t.p_value < level;
    return t;
}

struct CriteriaComparison {
    ProportionTest spurious;
    ProportionTest unidentified;
};

inline constexpr double kComparisonLevel = 0.1;

inline CriteriaComparison compare_criteria(const RateEstimate& a, const RateEstimate& b,
                                           double level = kComparisonLevel) {
    if (a.iterations == 0 || b.iterations == 0)
        throw InvalidArgument("cannot compare rate estimates with zero iterations");
    return CriteriaComparison{
        two_proportion_test(a.spurious_count, a.iterations, b.spurious_count, b.iterations, level),
        two_proportion_test(a.unidentified_count, a.iterations, b.unidentified_count, b.iterations, level)};
}

}  // namespace granger_lab

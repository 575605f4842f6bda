#include <gtest/gtest.h>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <random>

#include "granger_lab/criteria.hpp"
#include "granger_lab/granger.hpp"

using namespace granger_lab;

namespace {

FitResult fit(double rss, std::size_t n, std::size_t k) {
    FitResult f;
    f.rss = rss;
    f.tss = 1e6;
    f.n_obs = n;
    f.n_params = k;
    return f;
}

double f_tail_by_quadrature(double x, double d1, double d2) {
    const boost::math::fisher_f_distribution<double> dist(d1, d2);
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate([&](double t) { return boost::math::pdf(dist, x + t); }, 0.0,
                                std::numeric_limits<double>::infinity(), 1e-14);
}

}  // namespace

TEST(Statistic, ClosedFormExample) {
    const auto r = fit(1.2, 50, 4);
    const auto u = fit(1.0, 50, 6);
    EXPECT_NEAR(statistic(Criterion::LR, r, u).statistic, 50.0 * std::log(1.2), 1e-12);
    EXPECT_NEAR(statistic(Criterion::LR, r, u).statistic, 9.116, 1e-3);
    EXPECT_NEAR(statistic(Criterion::Wald, r, u).statistic, 10.0, 1e-12);
    EXPECT_NEAR(statistic(Criterion::LM, r, u).statistic, 50.0 * 0.2 / 1.2, 1e-12);
    EXPECT_NEAR(statistic(Criterion::Rao, r, u).statistic, 4.4, 1e-12);

    const auto wald = statistic(Criterion::Wald, r, u);
    EXPECT_EQ(wald.dof_numerator, 2u);
    EXPECT_FALSE(wald.dof_denominator.has_value());
    EXPECT_NEAR(wald.p_value, std::exp(-5.0), 1e-15);
    const auto rao = statistic(Criterion::Rao, r, u);
    EXPECT_EQ(rao.dof_denominator, 44u);
    EXPECT_NEAR(rao.p_value, f_tail_by_quadrature(4.4, 2, 44), 1e-10);
}

TEST(Statistic, EqualRssGivesZeroAndPOne) {
    for (auto c : kAllCriteria) {
        const auto o = statistic(c, fit(2.5, 80, 4), fit(2.5, 80, 6));
        EXPECT_EQ(o.statistic, 0.0);
        EXPECT_EQ(o.p_value, 1.0);
    }
}

TEST(Statistic, PerfectFitIsDegenerate) {
    auto u = fit(0.0, 50, 6);
    const auto costly = statistic(Criterion::Wald, fit(1.0, 50, 4), u);
    EXPECT_TRUE(costly.degenerate);
    EXPECT_EQ(costly.p_value, 0.0);
    const auto free_restriction = statistic(Criterion::LR, fit(0.0, 50, 4), u);
    EXPECT_TRUE(free_restriction.degenerate);
    EXPECT_EQ(free_restriction.p_value, 1.0);
}

TEST(Statistic, RejectsNonNestedPairs) {
    EXPECT_THROW(statistic(Criterion::Wald, fit(1.0, 50, 4), fit(1.0, 49, 6)), InvalidPair);
    EXPECT_THROW(statistic(Criterion::Wald, fit(1.0, 50, 6), fit(1.0, 50, 6)), InvalidPair);
    EXPECT_THROW(statistic(Criterion::Wald, fit(1.0, 50, 8), fit(1.0, 50, 6)), InvalidPair);
}

TEST(Statistic, WaldAtLeastLrAtLeastLmOnDenseGrid) {
    for (double ratio = 1.0 + 1e-6; ratio < 1e3; ratio *= 1.01) {
        const auto r = fit(ratio, 120, 4);
        const auto u = fit(1.0, 120, 6);
        const double w = statistic(Criterion::Wald, r, u).statistic;
        const double lr = statistic(Criterion::LR, r, u).statistic;
        const double lm = statistic(Criterion::LM, r, u).statistic;
        EXPECT_GT(w, lr);
        EXPECT_GT(lr, lm);
    }
}

TEST(Statistic, PValueDecreasesInStatistic) {
    for (auto c : kAllCriteria) {
        double prev = 1.0;
        for (double ratio = 1.0; ratio < 3.0; ratio += 0.01) {
            const double p = statistic(c, fit(ratio, 60, 4), fit(1.0, 60, 6)).p_value;
            EXPECT_LE(p, prev);
            EXPECT_GE(p, 0.0);
            prev = p;
        }
    }
}

TEST(Chi2, Examples) {
    for (std::size_t dof : {1u, 2u, 3u, 7u}) EXPECT_EQ(chi2_sf(0.0, dof), 1.0);
    EXPECT_NEAR(chi2_sf(5.991, 2), 0.05, 1e-4);
    EXPECT_NEAR(chi2_sf(9.21, 2), 0.01, 1e-4);
    EXPECT_NEAR(chi2_sf(3.841458820694124, 1), 0.05, 1e-12);
    EXPECT_NEAR(chi2_sf(7.814727903251178, 3), 0.05, 1e-12);
}

TEST(Chi2, DofTwoIsExponential) {
    for (int i = 0; i <= 10000; ++i) {
        const double x = 100.0 * i / 10000.0;
        EXPECT_LE(std::abs(chi2_sf(x, 2) - std::exp(-x / 2.0)), 1e-12);
    }
}

TEST(FDist, Examples) {
    EXPECT_EQ(f_sf(0.0, 3, 10), 1.0);
    EXPECT_NEAR(f_sf(1.0, 2, 2), 0.5, 1e-15);
    for (double x : {0.1, 0.5, 2.0, 10.0, 100.0}) EXPECT_NEAR(f_sf(x, 2, 2), 1.0 / (1.0 + x), 1e-14);
    EXPECT_NEAR(f_sf(3.0, 2, 44), 0.0600646, 1e-6);
}

TEST(FDist, MatchesQuadratureOracle) {
    for (std::size_t d1 : {1u, 2u, 3u, 6u})
        for (std::size_t d2 : {5u, 20u, 44u, 294u})
            for (double x : {0.05, 0.3, 1.0, 3.0, 8.0, 25.0}) {
                const double oracle = f_tail_by_quadrature(x, static_cast<double>(d1), static_cast<double>(d2));
                EXPECT_LE(std::abs(f_sf(x, d1, d2) - oracle), 1e-8 * oracle)
                    << "d1=" << d1 << " d2=" << d2 << " x=" << x;
            }
}

TEST(CompareCriteria, Examples) {
    auto rates = [](std::size_t count, std::size_t n) {
        RateEstimate r;
        r.iterations = n;
        r.spurious_count = count;
        r.unidentified_count = count;
        return r;
    };
    const auto same = compare_criteria(rates(120, 1000), rates(120, 1000));
    EXPECT_FALSE(same.spurious.different);
    EXPECT_EQ(same.spurious.p_value, 1.0);

    const auto apart = compare_criteria(rates(300, 1000), rates(200, 1000));
    EXPECT_TRUE(apart.spurious.different);
    EXPECT_NEAR(apart.spurious.z, 5.16, 0.01);

    EXPECT_FALSE(compare_criteria(rates(5, 100), rates(6, 100)).spurious.different);
    EXPECT_THROW(compare_criteria(rates(0, 0), rates(1, 10)), InvalidArgument);
}

TEST(Criteria, PValuesConvergeWithSampleSize) {
    // Weak true effect x -> y; the spread of the four p-values shrinks with n.
    std::vector<double> medians;
    for (std::size_t n : {50u, 100u, 500u, 5000u}) {
        std::vector<double> spreads;
        for (std::uint64_t rep = 0; rep < 100; ++rep) {
            RandomStream rng(derive_seed(31, n, rep));
            std::vector<double> x(n), y(n);
            for (std::size_t t = 0; t < n; ++t) {
                x[t] = rng.normal();
                y[t] = (t ? 0.3 * y[t - 1] + 0.1 * x[t - 1] : 0.0) + rng.normal();
            }
            GrangerConfig cfg;
            const auto fits = bivariate_fits(TimeSeries(x), TimeSeries(y), cfg);
            double lo = 1.0, hi = 0.0;
            for (auto c : kAllCriteria) {
                const double p = statistic(c, fits).p_value;
                lo = std::min(lo, p);
                hi = std::max(hi, p);
            }
            spreads.push_back(hi - lo);
        }
        std::nth_element(spreads.begin(), spreads.begin() + 50, spreads.end());
        medians.push_back(spreads[50]);
    }
    for (std::size_t i = 1; i < medians.size(); ++i) EXPECT_LT(medians[i], medians[i - 1]);
}

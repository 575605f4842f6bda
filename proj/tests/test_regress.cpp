#include <gtest/gtest.h>

#include <random>

#include "granger_lab/regress.hpp"

using namespace granger_lab;

namespace {

// Normal equations solved by Gaussian elimination with complete pivoting in long double.
std::vector<double> normal_equations_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    const auto k = static_cast<std::size_t>(a.cols());
    std::vector<std::vector<long double>> m(k, std::vector<long double>(k + 1, 0.0L));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j)
            for (Eigen::Index r = 0; r < a.rows(); ++r)
                m[i][j] += static_cast<long double>(a(r, static_cast<Eigen::Index>(i))) * a(r, static_cast<Eigen::Index>(j));
        for (Eigen::Index r = 0; r < a.rows(); ++r)
            m[i][k] += static_cast<long double>(a(r, static_cast<Eigen::Index>(i))) * b(r);
    }
    std::vector<std::size_t> col(k);
    for (std::size_t i = 0; i < k; ++i) col[i] = i;
    for (std::size_t p = 0; p < k; ++p) {
        std::size_t br = p, bc = p;
        for (std::size_t i = p; i < k; ++i)
            for (std::size_t j = p; j < k; ++j)
                if (std::fabs(m[i][j]) > std::fabs(m[br][bc])) br = i, bc = j;
        std::swap(m[p], m[br]);
        for (auto& row : m) std::swap(row[p], row[bc]);
        std::swap(col[p], col[bc]);
        for (std::size_t i = p + 1; i < k; ++i) {
            const long double f = m[i][p] / m[p][p];
            for (std::size_t j = p; j <= k; ++j) m[i][j] -= f * m[p][j];
        }
    }
    std::vector<long double> x(k);
    for (std::size_t i = k; i-- > 0;) {
        long double s = m[i][k];
        for (std::size_t j = i + 1; j < k; ++j) s -= m[i][j] * x[j];
        x[i] = s / m[i][i];
    }
    std::vector<double> out(k);
    for (std::size_t i = 0; i < k; ++i) out[col[i]] = static_cast<double>(x[i]);
    return out;
}

TimeSeries series_of(std::initializer_list<double> v) { return TimeSeries(std::vector<double>(v)); }

TrivariateSample reference_driver(std::size_t n, std::uint64_t seed) {
    return generate(reference_config(Topology::Driver, n, seed));
}

ModelSpec eq3_spec() { return ModelSpec{SeriesId::Z, {SeriesId::Y, SeriesId::X}, LagSpec{2, {2, 2}}, false}; }

}  // namespace

TEST(Design, ShiftedColumnsForLagOne) {
    const auto target = series_of({1, 2, 3, 4, 5});
    const auto pred = series_of({10, 20, 30, 40, 50});
    const std::array<const TimeSeries*, 1> preds{&pred};
    const auto d = build_design(target, preds, LagSpec{1, {1}});
    ASSERT_EQ(d.matrix.rows(), 4);
    ASSERT_EQ(d.matrix.cols(), 2);
    for (Eigen::Index r = 0; r < 4; ++r) {
        EXPECT_EQ(d.matrix(r, 0), static_cast<double>(r + 1));
        EXPECT_EQ(d.matrix(r, 1), 10.0 * static_cast<double>(r + 1));
        EXPECT_EQ(d.response(r), static_cast<double>(r + 2));
    }
}

TEST(Design, UnrestrictedTrivariateShape) {
    const auto s = reference_driver(60, 1);
    const auto d = build_design(s, eq3_spec());
    EXPECT_EQ(d.matrix.cols(), 6);
    EXPECT_EQ(d.matrix.rows(), 58);
    EXPECT_EQ(d.first_row_time, 2u);
}

TEST(Design, InsufficientData) {
    const auto t = series_of({1, 2, 3});
    const auto p = series_of({3, 1, 2});
    const std::array<const TimeSeries*, 2> preds{&p, &p};
    EXPECT_THROW(build_design(t, preds, LagSpec{2, {2, 2}}), InsufficientData);
}

TEST(Design, OptionalIntercept) {
    const auto s = reference_driver(40, 2);
    auto spec = eq3_spec();
    spec.intercept = true;
    const auto d = build_design(s, spec);
    EXPECT_EQ(d.matrix.cols(), 7);
    EXPECT_TRUE((d.matrix.col(6).array() == 1.0).all());
}

TEST(ModelSpec, Validation) {
    EXPECT_THROW((ModelSpec{SeriesId::Z, {SeriesId::Z}, LagSpec{2, {2}}, false}).validate(), InvalidArgument);
    EXPECT_THROW((ModelSpec{SeriesId::Z, {SeriesId::X, SeriesId::X}, LagSpec{2, {2, 2}}, false}).validate(),
                 InvalidArgument);
    EXPECT_THROW((ModelSpec{SeriesId::Z, {SeriesId::X}, LagSpec{2, {2, 2}}, false}).validate(), InvalidArgument);
}

TEST(Ols, ExactFit) {
    Eigen::MatrixXd a(5, 1);
    a << 1, 2, 3, 4, 5;
    const Eigen::VectorXd b = 2.0 * a.col(0);
    const auto f = ols_fit(a, b);
    EXPECT_NEAR(f.coefficients(0), 2.0, 1e-14);
    EXPECT_NEAR(f.rss, 0.0, 1e-24);
}

TEST(Ols, MatchesNormalEquationsOracle) {
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<int> rows(10, 200), cols(1, 8);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 100; ++trial) {
        const int k = cols(gen);
        const int n = std::max(rows(gen), k + 2);
        Eigen::MatrixXd a(n, k);
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) a(i, j) = nd(gen);
            b(i) = nd(gen);
        }
        const auto f = ols_fit(a, b);
        const auto oracle = normal_equations_solve(a, b);
        for (int j = 0; j < k; ++j)
            EXPECT_LE(std::abs(f.coefficients(j) - oracle[static_cast<std::size_t>(j)]),
                      1e-8 * std::max(1.0, std::abs(oracle[static_cast<std::size_t>(j)])));
    }
}

TEST(Ols, ResidualOrthogonalToColumns) {
    const auto s = reference_driver(300, 5);
    const auto d = build_design(s, eq3_spec());
    const auto f = ols_fit(d);
    const Eigen::VectorXd resid = d.response - d.matrix * f.coefficients;
    for (Eigen::Index j = 0; j < d.matrix.cols(); ++j)
        EXPECT_LE(std::abs(d.matrix.col(j).dot(resid)), 1e-8 * d.matrix.col(j).norm() * resid.norm());
    EXPECT_GT(f.n_obs, f.n_params);
    EXPECT_GE(f.rss, 0.0);
}

TEST(Ols, RecoversDriverCoefficients) {
    // Columns: z lags 1..2, y lags 1..2, x lags 1..2. Truth: 0.3, 0, 0, 0, 0, 1.
    double sum_x1 = 0.0, sum_x2 = 0.0, sq_x1 = 0.0, sq_x2 = 0.0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
        const auto f = ols_fit(build_design(reference_driver(300, 100 + static_cast<std::uint64_t>(r)), eq3_spec()));
        sum_x1 += f.coefficients(4);
        sum_x2 += f.coefficients(5);
        sq_x1 += f.coefficients(4) * f.coefficients(4);
        sq_x2 += f.coefficients(5) * f.coefficients(5);
    }
    const double m1 = sum_x1 / reps, m2 = sum_x2 / reps;
    const double sd1 = std::sqrt(sq_x1 / reps - m1 * m1), sd2 = std::sqrt(sq_x2 / reps - m2 * m2);
    EXPECT_NEAR(m1, 0.0, 4.0 * sd1 / std::sqrt(reps) + 1e-3);
    EXPECT_NEAR(m2, 1.0, 4.0 * sd2 / std::sqrt(reps) + 1e-3);
}

TEST(Ols, RankDeficientOnConstantOrDuplicateColumns) {
    Eigen::MatrixXd a(20, 2);
    for (int i = 0; i < 20; ++i) a(i, 0) = a(i, 1) = std::sin(i);
    EXPECT_THROW(ols_fit(a, Eigen::VectorXd::Ones(20)), RankDeficient);
    EXPECT_THROW(ols_fit(Eigen::MatrixXd::Zero(20, 2), Eigen::VectorXd::Ones(20)), RankDeficient);
}

TEST(Ols, NestingScaleAndPermutation) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const auto s = reference_driver(80, seed);
        const ModelSpec restricted{SeriesId::Z, {SeriesId::Y}, LagSpec{2, {2}}, false};
        const auto nested = fit_nested(s, restricted, eq3_spec());
        EXPECT_GE(nested.restricted.rss, nested.unrestricted.rss - 1e-9);

        const auto d = build_design(s, eq3_spec());
        const auto f = ols_fit(d);
        const auto scaled = ols_fit(d.matrix, 3.5 * d.response);
        for (Eigen::Index j = 0; j < 6; ++j) EXPECT_NEAR(scaled.coefficients(j), 3.5 * f.coefficients(j), 1e-10);
        EXPECT_NEAR(scaled.rss, 3.5 * 3.5 * f.rss, 1e-10 * scaled.rss);

        const ModelSpec swapped{SeriesId::Z, {SeriesId::X, SeriesId::Y}, LagSpec{2, {2, 2}}, false};
        const auto g = ols_fit(build_design(s, swapped));
        EXPECT_NEAR(g.rss, f.rss, 1e-10 * std::max(1.0, f.rss));
        for (Eigen::Index j = 0; j < 2; ++j) {
            EXPECT_NEAR(g.coefficients(j), f.coefficients(j), 1e-9);
            EXPECT_NEAR(g.coefficients(2 + j), f.coefficients(4 + j), 1e-9);
            EXPECT_NEAR(g.coefficients(4 + j), f.coefficients(2 + j), 1e-9);
        }
    }
}

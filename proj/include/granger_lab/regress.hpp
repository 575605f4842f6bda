#pragma once

// Lagged design matrices and least-squares fits for the restricted and
// unrestricted autoregressions.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "granger_lab/core.hpp"
#include "granger_lab/datagen.hpp"

namespace granger_lab {

struct ModelSpec {
    SeriesId target = SeriesId::Z;
    // Predictors other than the target; the target's own lags come first in
    // the design regardless.
    std::vector<SeriesId> predictors;
    // predictor_lags[i] applies to predictors[i].
    LagSpec lags{2, {}};
    bool intercept = false;

    std::size_t n_params() const {
        std::size_t k = lags.target_lags + (intercept ? 1 : 0);
        for (auto l : lags.predictor_lags) k += l;
        return k;
    }

    void validate() const {
        lags.validate();
        if (lags.predictor_lags.size() != predictors.size())
            throw InvalidArgument("one lag count is required per predictor");
        for (std::size_t i = 0; i < predictors.size(); ++i) {
            if (predictors[i] == target) throw InvalidArgument("target must not appear among predictors");
            for (std::size_t j = i + 1; j < predictors.size(); ++j)
                if (predictors[i] == predictors[j]) throw InvalidArgument("duplicate predictor");
        }
    }
};

struct Design {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd response;
    std::size_t first_row_time = 0;  // time index of the first response entry
};

struct FitResult {
    Eigen::VectorXd coefficients;
    double rss = 0.0;
    // Sum of squares of the response, used to recognise numerically perfect fits.
    double tss = 0.0;
    std::size_t n_obs = 0;
    std::size_t n_params = 0;
};

/// Builds rows t = start..length-1 where start = max(window_start, max lag).
/// Column order: target lags 1..i, then each predictor's lags 1..j, then the
/// optional intercept.
inline Design build_design(const TimeSeries& target, std::span<const TimeSeries* const> predictors,
                           const LagSpec& lags, std::size_t window_start = 0, bool intercept = false) {
    lags.validate();
    if (lags.predictor_lags.size() != predictors.size())
        throw InvalidArgument("one lag count is required per predictor");
    const std::size_t length = target.length();
    for (const auto* p : predictors)
        if (p->length() != length) throw InvalidArgument("all series must have the same length");

    const std::size_t start = std::max(window_start, lags.max_lag());
    std::size_t k = lags.target_lags + (intercept ? 1 : 0);
    for (auto l : lags.predictor_lags) k += l;
    if (length <= start || length - start < k + 1)
        throw InsufficientData("need at least " + std::to_string(k + 1) + " observations after a look-back of " +
                               std::to_string(start) + ", series has length " + std::to_string(length));
    const std::size_t n = length - start;

    Design d;
    d.first_row_time = start;
    d.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    d.response.resize(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t t = start + r;
        const auto row = static_cast<Eigen::Index>(r);
        Eigen::Index col = 0;
        d.response(row) = target[t];
        for (std::size_t lag = 1; lag <= lags.target_lags; ++lag) d.matrix(row, col++) = target[t - lag];
        for (std::size_t p = 0; p < predictors.size(); ++p)
            for (std::size_t lag = 1; lag <= lags.predictor_lags[p]; ++lag)
                d.matrix(row, col++) = (*predictors[p])[t - lag];
        if (intercept) d.matrix(row, col++) = 1.0;
    }
    return d;
}

inline Design build_design(const TrivariateSample& sample, const ModelSpec& spec, std::size_t window_start = 0) {
    spec.validate();
    std::vector<const TimeSeries*> preds;
    for (auto id : spec.predictors) preds.push_back(&sample.series(id));
    return build_design(sample.series(spec.target), preds, spec.lags, window_start, spec.intercept);
}

inline constexpr double kRankTolerance = 1e-10;

/// Least squares through a column-pivoted Householder QR. Throws
/// RankDeficient when a pivot falls below 1e-10 times the largest column norm.
inline FitResult ols_fit(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& response) {
    const auto n = matrix.rows();
    const auto k = matrix.cols();
    if (response.size() != n) throw InvalidArgument("response length does not match the design matrix");
    if (k == 0) throw InvalidArgument("design matrix has no columns");
    if (n <= k)
        throw InsufficientData("need more observations (" + std::to_string(n) + ") than parameters (" +
                               std::to_string(k) + ")");

    const double max_col_norm = matrix.colwise().norm().maxCoeff();
    if (!(max_col_norm > 0.0)) throw RankDeficient("design matrix is identically zero");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(matrix);
    const auto& r = qr.matrixR();
    const double tol = kRankTolerance * max_col_norm;
    for (Eigen::Index i = 0; i < k; ++i)
        if (!(std::abs(r(i, i)) > tol))
            throw RankDeficient("design matrix is rank deficient (pivot " + std::to_string(i) +
                                " below tolerance); check for constant or duplicated series");

    FitResult fit;
    fit.coefficients = qr.solve(response);
    const Eigen::VectorXd residual = response - matrix * fit.coefficients;
    fit.rss = residual.squaredNorm();
    fit.tss = response.squaredNorm();
    fit.n_obs = static_cast<std::size_t>(n);
    fit.n_params = static_cast<std::size_t>(k);
    return fit;
}

inline FitResult ols_fit(const Design& d) { return ols_fit(d.matrix, d.response); }

/// A restricted model and its unrestricted superset on a shared window.
struct NestedFits {
    FitResult restricted;
    FitResult unrestricted;
};

/// Fits both models over the rows allowed by the larger look-back.
inline NestedFits fit_nested(const TrivariateSample& sample, const ModelSpec& restricted,
                             const ModelSpec& unrestricted) {
    const std::size_t window = std::max(restricted.lags.max_lag(), unrestricted.lags.max_lag());
    return NestedFits{ols_fit(build_design(sample, restricted, window)),
                      ols_fit(build_design(sample, unrestricted, window))};
}

}  // namespace granger_lab

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fib/matrix.hpp"

namespace fib {

using ErrorVector = std::vector<double>;

/// Nonnegative shares summing to 1: each feature's slice of the total error.
using ImpactVector = std::vector<double>;

enum class BalanceErrorKind { MSE, MAE };

std::string to_string(BalanceErrorKind kind);
BalanceErrorKind balance_kind_from_string(const std::string& s);

enum class MatrixMode { PerRowMean, PerFeatureAggregate };

std::string to_string(MatrixMode mode);

/// FIB score together with the intermediate quantities that produced it.
struct FibReport {
    double fib = 0.0;
    double nfii = 0.0;
    double fii = 0.0;
    ImpactVector impact;
    ErrorVector internal_error;
    std::size_t k = 0;
    BalanceErrorKind balance_kind = BalanceErrorKind::MSE;
    bool has_mode = false; // set for matrix-level scores
    MatrixMode mode = MatrixMode::PerFeatureAggregate;
};

/// Per-feature absolute error |x_k - y_k|.
ErrorVector absolute_error(const FeatureVector& x, const FeatureVector& y);

/// Normalizes an error vector into shares of the total error. When the
/// total error is below the zero threshold every feature is credited
/// equally (share 1/K). `scale` sets the relative zero threshold; callers
/// that know the input magnitude pass it so near-zero totals from
/// cancellation are treated as "no error".
ImpactVector feature_impact(const ErrorVector& e, double scale = 1.0);

/// Distance between an impact vector and the uniform balance point 1/K,
/// as a mean squared or mean absolute deviation.
double feature_impact_imbalance(const ImpactVector& impact, BalanceErrorKind kind);

/// Rescales the imbalance by its theoretical maximum so it lies in [0,1].
/// MSE maximum is (k-1)/k^2; MAE maximum is 2(k-1)/k^2.
double normalize_fii(double fii, std::size_t k, BalanceErrorKind kind);

/// Full pipeline: absolute error -> impact -> imbalance -> normalized
/// imbalance -> 1 - that. 1 means every feature contributes equally to
/// the error, 0 means a single feature carries it all.
FibReport fib_score(const FeatureVector& x, const FeatureVector& y,
                    BalanceErrorKind kind = BalanceErrorKind::MSE);

/// Closed-form evaluation of the MSE-based score, kept as an independent
/// cross-check of the pipeline.
double fib_direct(const FeatureVector& x, const FeatureVector& y);

/// Matrix-level score. PerRowMean averages per-row scores;
/// PerFeatureAggregate averages the absolute error per feature across
/// rows first and scores that single M-vector.
FibReport fib_matrix(const FeatureMatrix& x, const FeatureMatrix& y,
                     BalanceErrorKind kind, MatrixMode mode);

namespace detail {
/// Theoretical maximum of the (mean-form) imbalance for k features.
double fii_bound(std::size_t k, BalanceErrorKind kind);
} // namespace detail

} // namespace fib

#include "fib/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fib/errors.hpp"
#include "fib/numeric.hpp"

namespace fib {

namespace {

constexpr double kZeroErrorRel = 1e-12;
constexpr double kBoundSlack = 1e-9;

void require_finite(const FeatureVector& v, const char* name) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NonFinite(std::string(name) + " contains a non-finite entry");
        }
    }
}

double abs_sum(const FeatureVector& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

} // namespace

std::string to_string(BalanceErrorKind kind) {
    return kind == BalanceErrorKind::MSE ? "mse" : "mae";
}

BalanceErrorKind balance_kind_from_string(const std::string& s) {
    if (s == "mse") return BalanceErrorKind::MSE;
    if (s == "mae") return BalanceErrorKind::MAE;
    throw std::invalid_argument("unknown balance kind: " + s);
}

std::string to_string(MatrixMode mode) {
    return mode == MatrixMode::PerRowMean ? "per-row" : "aggregate";
}

ErrorVector absolute_error(const FeatureVector& x, const FeatureVector& y) {
    if (x.size() != y.size()) {
        throw DimensionMismatch("absolute_error: lengths differ (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
    }
    require_finite(x, "x");
    require_finite(y, "y");
    ErrorVector e(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) e[k] = std::abs(x[k] - y[k]);
    return e;
}

ImpactVector feature_impact(const ErrorVector& e, double scale) {
    for (double v : e) {
        if (v < 0.0) throw NegativeError("feature_impact: negative error entry");
    }
    const std::size_t k = e.size();
    const double total = compensated_sum(e);
    if (total <= kZeroErrorRel * std::max(1.0, scale)) {
        // No error made: every feature contributed equally by convention.
        return ImpactVector(k, 1.0 / static_cast<double>(k));
    }
    ImpactVector shares(k);
    for (std::size_t i = 0; i < k; ++i) shares[i] = e[i] / total;
    return shares;
}

double feature_impact_imbalance(const ImpactVector& impact, BalanceErrorKind kind) {
    const std::size_t k = impact.size();
    const double balance = 1.0 / static_cast<double>(k);
    // A standard basis vector sits exactly at the theoretical maximum; return
    // the bound itself so normalization yields exactly 1 instead of 1 +/- ulp.
    std::size_t ones = 0, zeros = 0;
    for (double c : impact) {
        if (c == 1.0) ++ones;
        else if (c == 0.0) ++zeros;
    }
    if (ones == 1 && zeros == k - 1) return detail::fii_bound(k, kind);
    std::vector<double> devs(k);
    if (kind == BalanceErrorKind::MSE) {
        for (std::size_t i = 0; i < k; ++i) {
            const double d = impact[i] - balance;
            devs[i] = d * d;
        }
    } else {
        for (std::size_t i = 0; i < k; ++i) devs[i] = std::abs(impact[i] - balance);
    }
    return compensated_sum(devs) / static_cast<double>(k);
}

double detail::fii_bound(std::size_t k, BalanceErrorKind kind) {
    const double m = static_cast<double>(k);
    const double mse_bound = (m - 1.0) / (m * m);
    return kind == BalanceErrorKind::MSE ? mse_bound : 2.0 * mse_bound;
}

double normalize_fii(double fii, std::size_t k, BalanceErrorKind kind) {
    if (k < 2) {
        throw DegenerateDimension("normalize_fii: imbalance is undefined for a single feature");
    }
    const double bound = detail::fii_bound(k, kind);
    if (fii < -kBoundSlack || fii > bound + kBoundSlack) {
        throw std::invalid_argument("normalize_fii: imbalance outside its theoretical bound");
    }
    return std::clamp(fii / bound, 0.0, 1.0);
}

FibReport fib_score(const FeatureVector& x, const FeatureVector& y, BalanceErrorKind kind) {
    if (x.size() < 2) {
        throw DegenerateDimension("fib: needs at least 2 features");
    }
    FibReport report;
    report.internal_error = absolute_error(x, y);
    report.impact = feature_impact(report.internal_error, abs_sum(x) + abs_sum(y));
    report.k = report.impact.size();
    report.balance_kind = kind;
    report.fii = feature_impact_imbalance(report.impact, kind);
    report.nfii = normalize_fii(report.fii, report.k, kind);
    report.fib = 1.0 - report.nfii;
    return report;
}

double fib_direct(const FeatureVector& x, const FeatureVector& y) {
    if (x.size() != y.size()) throw DimensionMismatch("fib_direct: lengths differ");
    if (x.size() < 2) throw DegenerateDimension("fib_direct: needs at least 2 features");
    require_finite(x, "x");
    require_finite(y, "y");
    const double m = static_cast<double>(x.size());
    std::vector<double> ae(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) ae[k] = std::abs(x[k] - y[k]);
    const double l1 = compensated_sum(ae);
    if (l1 <= kZeroErrorRel * std::max(1.0, abs_sum(x) + abs_sum(y))) return 1.0;
    std::vector<double> devs(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = ae[k] / l1 - 1.0 / m;
        devs[k] = d * d;
    }
    return 1.0 - (m / (m - 1.0)) * compensated_sum(devs);
}

FibReport fib_matrix(const FeatureMatrix& x, const FeatureMatrix& y, BalanceErrorKind kind,
                     MatrixMode mode) {
    if (!x.same_shape(y)) throw DimensionMismatch("fib_matrix: shapes differ");
    if (x.rows() == 0) throw DimensionMismatch("fib_matrix: empty matrix");

    FibReport report;
    report.balance_kind = kind;
    report.has_mode = true;
    report.mode = mode;
    report.k = x.cols();

    if (mode == MatrixMode::PerRowMean) {
        std::vector<double> scores(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            scores[i] = fib_score(x.row_vector(i), y.row_vector(i), kind).fib;
        }
        report.fib = compensated_sum(scores) / static_cast<double>(x.rows());
        report.nfii = 1.0 - report.fib;
        report.fii = report.nfii * detail::fii_bound(report.k, kind);
        return report;
    }

    const double n = static_cast<double>(x.rows());
    ErrorVector agg(x.cols(), 0.0);
    double scale = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto xi = x.row(i);
        const auto yi = y.row(i);
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (!std::isfinite(xi[j]) || !std::isfinite(yi[j])) {
                throw NonFinite("fib_matrix: non-finite entry");
            }
            agg[j] += std::abs(xi[j] - yi[j]);
            scale += std::abs(xi[j]) + std::abs(yi[j]);
        }
    }
    for (double& v : agg) v /= n;
    report.internal_error = agg;
    report.impact = feature_impact(agg, scale / n);
    report.fii = feature_impact_imbalance(report.impact, kind);
    report.nfii = normalize_fii(report.fii, report.k, kind);
    report.fib = 1.0 - report.nfii;
    return report;
}

} // namespace fib

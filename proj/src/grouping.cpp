#include "fib/grouping.hpp"

#include <algorithm>
#include <cmath>

#include "fib/errors.hpp"
#include "fib/numeric.hpp"

namespace fib {

std::string to_string(Aggregation a) {
    switch (a) {
        case Aggregation::SortedSplit: return "sorted-split";
        case Aggregation::ContiguousSplit: return "contiguous-split";
        case Aggregation::ExplicitAssignment: return "explicit";
    }
    return "?";
}

std::string to_string(Reduction r) {
    return r == Reduction::Sum ? "sum" : "mean";
}

Aggregation aggregation_from_string(const std::string& s) {
    if (s == "sorted-split") return Aggregation::SortedSplit;
    if (s == "contiguous-split") return Aggregation::ContiguousSplit;
    if (s == "explicit") return Aggregation::ExplicitAssignment;
    throw std::invalid_argument("unknown aggregation: " + s);
}

Reduction reduction_from_string(const std::string& s) {
    if (s == "sum") return Reduction::Sum;
    if (s == "mean") return Reduction::Mean;
    throw std::invalid_argument("unknown reduction: " + s);
}

namespace {

ErrorVector split_reduce(const std::vector<double>& values, std::size_t k, Reduction reduction) {
    const std::size_t m = values.size();
    const std::size_t base = m / k;
    const std::size_t extra = m % k; // first `extra` blocks get one more element
    ErrorVector out(k);
    std::size_t pos = 0;
    for (std::size_t g = 0; g < k; ++g) {
        const std::size_t len = base + (g < extra ? 1 : 0);
        const double s = compensated_sum({values.data() + pos, len});
        out[g] = reduction == Reduction::Sum ? s : s / static_cast<double>(len);
        pos += len;
    }
    return out;
}

} // namespace

ErrorVector group_errors(const ErrorVector& e, const GroupingSpec& spec) {
    const std::size_t m = e.size();
    if (spec.k < 1) throw BadAssignment("group_errors: k must be >= 1");
    if (m < spec.k) {
        throw TooFewFeatures("group_errors: " + std::to_string(m) + " features into " +
                             std::to_string(spec.k) + " groups");
    }
    for (double v : e) {
        if (v < 0.0) throw NegativeError("group_errors: negative error entry");
    }

    switch (spec.aggregation) {
        case Aggregation::ContiguousSplit:
            return split_reduce(e, spec.k, spec.reduction);
        case Aggregation::SortedSplit: {
            std::vector<double> sorted(e);
            // stable so ties keep original feature order
            std::stable_sort(sorted.begin(), sorted.end(), std::greater<>());
            return split_reduce(sorted, spec.k, spec.reduction);
        }
        case Aggregation::ExplicitAssignment: {
            if (spec.assignment.size() != m) {
                throw BadAssignment("group_errors: assignment must cover every feature");
            }
            ErrorVector sums(spec.k, 0.0);
            std::vector<std::size_t> counts(spec.k, 0);
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t g = spec.assignment[i];
                if (g >= spec.k) throw BadAssignment("group_errors: group index out of range");
                sums[g] += e[i];
                counts[g] += 1;
            }
            for (std::size_t g = 0; g < spec.k; ++g) {
                if (counts[g] == 0) throw BadAssignment("group_errors: empty group");
                if (spec.reduction == Reduction::Mean) sums[g] /= static_cast<double>(counts[g]);
            }
            return sums;
        }
    }
    throw BadAssignment("group_errors: unknown aggregation");
}

FibReport grouped_fib(const FeatureVector& x, const FeatureVector& y, const GroupingSpec& spec,
                      BalanceErrorKind kind) {
    if (spec.k < 2) throw DegenerateDimension("grouped_fib: needs at least 2 groups");
    FibReport report;
    const ErrorVector raw = absolute_error(x, y);
    report.internal_error = group_errors(raw, spec);
    double scale = 0.0;
    for (double v : x) scale += std::abs(v);
    for (double v : y) scale += std::abs(v);
    report.impact = feature_impact(report.internal_error, scale);
    report.k = spec.k;
    report.balance_kind = kind;
    report.fii = feature_impact_imbalance(report.impact, kind);
    report.nfii = normalize_fii(report.fii, report.k, kind);
    report.fib = 1.0 - report.nfii;
    return report;
}

} // namespace fib

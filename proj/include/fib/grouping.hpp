#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fib/core.hpp"

namespace fib {

enum class Aggregation { SortedSplit, ContiguousSplit, ExplicitAssignment };
enum class Reduction { Sum, Mean };

std::string to_string(Aggregation a);
std::string to_string(Reduction r);
Aggregation aggregation_from_string(const std::string& s);
Reduction reduction_from_string(const std::string& s);

/// How to reduce M per-feature errors to K group errors. SortedSplit
/// sorts errors descending and partitions into K contiguous blocks;
/// when M does not divide evenly the first M mod K blocks take one
/// extra element.
struct GroupingSpec {
    std::size_t k = 2;
    Aggregation aggregation = Aggregation::SortedSplit;
    Reduction reduction = Reduction::Sum;
    std::vector<std::size_t> assignment; // ExplicitAssignment only: group index per feature
};

ErrorVector group_errors(const ErrorVector& e, const GroupingSpec& spec);

FibReport grouped_fib(const FeatureVector& x, const FeatureVector& y, const GroupingSpec& spec,
                      BalanceErrorKind kind = BalanceErrorKind::MSE);

} // namespace fib

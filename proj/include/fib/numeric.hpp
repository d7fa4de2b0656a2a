#pragma once

#include <cmath>
#include <span>

namespace fib {

/// Neumaier-compensated sum. Impact shares hover near 1/M, so plain
/// accumulation loses digits once M gets large; compensation keeps the
/// normalization stable for any M.
inline double compensated_sum(std::span<const double> xs) {
    double sum = 0.0;
    double comp = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

} // namespace fib

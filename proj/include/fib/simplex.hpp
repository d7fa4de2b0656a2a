#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fib/core.hpp"

namespace fib {

/// Numerical certification that the un-averaged imbalance sums
/// phi = sum |c_i - 1/m| and psi = sum (c_i - 1/m)^2 attain their maxima
/// 2(m-1)/m and (m-1)/m at the simplex vertices. These maxima back the
/// normalization constants used by normalize_fii.
struct SimplexVerification {
    std::size_t m = 0;
    double phi_bound = 0.0;
    double psi_bound = 0.0;
    double max_phi_observed = 0.0;
    double max_psi_observed = 0.0;
    bool vertex_attains = false;
};

/// Un-averaged imbalance sums over one simplex point.
double phi_sum(const ImpactVector& point);
double psi_sum(const ImpactVector& point);

/// The m standard basis vectors: the vertices of the probability simplex.
std::vector<ImpactVector> vertex_enumerate(std::size_t m);

/// Uniform samples on the probability simplex (normalized unit-rate
/// exponential draws); deterministic per seed.
std::vector<ImpactVector> sample_simplex(std::size_t m, std::size_t n, std::uint64_t seed);

/// Evaluates phi and psi on every vertex and sample; throws
/// VerificationFailure if a vertex misses its bound or any sample
/// exceeds one.
SimplexVerification verify_theorem_max(std::size_t m, std::size_t n_samples, std::uint64_t seed);

} // namespace fib

#include "fib/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "fib/errors.hpp"
#include "fib/numeric.hpp"

namespace fib {

double phi_sum(const ImpactVector& point) {
    const double b = 1.0 / static_cast<double>(point.size());
    std::vector<double> devs(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) devs[i] = std::abs(point[i] - b);
    return compensated_sum(devs);
}

double psi_sum(const ImpactVector& point) {
    const double b = 1.0 / static_cast<double>(point.size());
    std::vector<double> devs(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double d = point[i] - b;
        devs[i] = d * d;
    }
    return compensated_sum(devs);
}

std::vector<ImpactVector> vertex_enumerate(std::size_t m) {
    std::vector<ImpactVector> vertices(m, ImpactVector(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) vertices[i][i] = 1.0;
    return vertices;
}

std::vector<ImpactVector> sample_simplex(std::size_t m, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> expo(1.0);
    std::vector<ImpactVector> samples(n, ImpactVector(m));
    for (auto& point : samples) {
        for (double& v : point) v = expo(rng);
        const double total = compensated_sum(point);
        for (double& v : point) v /= total;
    }
    return samples;
}

SimplexVerification verify_theorem_max(std::size_t m, std::size_t n_samples, std::uint64_t seed) {
    const double md = static_cast<double>(m);
    SimplexVerification result;
    result.m = m;
    result.phi_bound = 2.0 * (md - 1.0) / md;
    result.psi_bound = (md - 1.0) / md;

    constexpr double tol = 1e-12;

    for (const auto& vertex : vertex_enumerate(m)) {
        const double phi = phi_sum(vertex);
        const double psi = psi_sum(vertex);
        if (std::abs(phi - result.phi_bound) > tol || std::abs(psi - result.psi_bound) > tol) {
            throw VerificationFailure("vertex does not attain the bound at m=" + std::to_string(m));
        }
        result.max_phi_observed = std::max(result.max_phi_observed, phi);
        result.max_psi_observed = std::max(result.max_psi_observed, psi);
    }
    result.vertex_attains = true;

    for (const auto& point : sample_simplex(m, n_samples, seed)) {
        const double phi = phi_sum(point);
        const double psi = psi_sum(point);
        if (phi > result.phi_bound + tol || psi > result.psi_bound + tol) {
            throw VerificationFailure("interior sample exceeds the bound at m=" +
                                      std::to_string(m));
        }
        result.max_phi_observed = std::max(result.max_phi_observed, phi);
        result.max_psi_observed = std::max(result.max_psi_observed, psi);
    }
    return result;
}

} // namespace fib

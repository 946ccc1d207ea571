#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sdssar {

/// n paired observations: scalar X_i and d-dimensional y_i (row-major n x d).
struct PCSample {
    std::vector<double> scalars;
    std::vector<double> vectors;
    std::size_t dim = 1;

    std::size_t size() const noexcept { return scalars.size(); }
    std::span<const double> vector(std::size_t i) const {
        return {vectors.data() + i * dim, dim};
    }
    void validate() const;
};

struct PCStatistic {
    double pcov_sq = 0.0;
    double cvar_x_sq = 0.0;
    double cvar_y_sq = 0.0;
    double pc = 0.0;
};

inline constexpr std::size_t kMaxProjectionSample = 512;

/// Angle between u and v in [0, pi]. Zero vectors give 0. In one dimension
/// the result is exactly 0 (same sign) or pi (opposite signs).
double angle(std::span<const double> u, std::span<const double> v);

/// Sample projection correlation between a scalar and a vector variable.
/// O(n^3 d). Requires 3 <= n <= kMaxProjectionSample.
PCStatistic projection_correlation(const PCSample& sample);

struct IndependenceResult {
    PCStatistic statistic;
    double p_value = 1.0;
    bool reject = false;
    std::size_t permutations = 0;
};

/// Permutation test of independence: p = (1 + #{perm pcov^2 >= observed}) / (1 + P)
/// over random re-pairings of scalars to vectors. Rejects when p <= alpha.
IndependenceResult independence_test(const PCSample& sample, double alpha,
                                     std::size_t permutations, std::uint64_t seed);

/// Uniform subsample without replacement down to `n` observations.
PCSample subsample(const PCSample& sample, std::size_t n, std::uint64_t seed);

}  // namespace sdssar

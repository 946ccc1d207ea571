#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sdssar/pcorr.hpp"
#include "sdssar/sampler.hpp"

namespace sdssar {

/// Builds (X_i, y_i) from n randomly chosen aligned sites of two equally
/// shaped rasters. With patch = 1, y_i is the single pixel (d = 1); with
/// patch = p (odd), y_i is the p x p neighborhood (reflect-padded), d = p*p.
PCSample aligned_pair_sample(const Raster& x_side, const Raster& y_side, std::size_t n,
                             std::uint64_t seed, std::size_t patch = 1);

/// Pair sample between sub-images `first` and `second` of a stack, with the
/// decorrelator applied to the first side when given.
PCSample stack_pair_sample(const SubImageStack& stack, std::size_t first, std::size_t second,
                           const std::optional<DecorrelatorSpec>& decorrelator, std::size_t n,
                           std::uint64_t seed, std::size_t patch = 1);

/// PC between decorrelate(y_1) and y_2 of ra_sample(y, k, seed) on n sites.
PCStatistic pair_independence_probe(const IntensityImage& image, std::size_t k,
                                    std::uint64_t seed, const DecorrelatorSpec& spec,
                                    std::size_t n, std::size_t patch = 1);

struct ConvergencePoint {
    std::size_t pairs = 0;
    double mean_sq_diff = 0.0;  ///< trial mean of (mean(u) - mean(v))^2
    double std_error = 0.0;     ///< standard error of that mean
};

struct ConvergenceReport {
    std::vector<ConvergencePoint> points;
    double slope = 0.0;  ///< OLS slope of log(mean_sq_diff) against log(pairs)
    double intercept = 0.0;
    double slope_ci_low = 0.0;  ///< 95% interval, delta-method variances
    double slope_ci_high = 0.0;
    std::size_t trials = 0;
};

/// For each N, draws `trials` speckled constant scenes of 2 x 2N pixels, splits
/// them with ra_sample(k = 2) into sub-images u, v of N pixels each and
/// averages (mean(u) - mean(v))^2. No looks means a noise-free scene.
ConvergenceReport convergence_probe(std::optional<int> looks, const std::vector<std::size_t>& sizes,
                                    std::size_t trials, std::uint64_t seed);

}  // namespace sdssar

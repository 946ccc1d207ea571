#include "sdssar/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdssar/errors.hpp"
#include "sdssar/rng.hpp"
#include "sdssar/speckle.hpp"
#include "sdssar/tensor.hpp"

namespace sdssar {

PCSample aligned_pair_sample(const Raster& x_side, const Raster& y_side, std::size_t n,
                             std::uint64_t seed, std::size_t patch) {
    if (!x_side.same_shape(y_side)) throw InvalidArgument("pair sample: shape mismatch");
    if (n < 8) throw InvalidArgument("pair sample: need n >= 8 sites");
    if (patch == 0 || patch % 2 == 0) throw InvalidArgument("pair sample: patch side must be odd");
    const std::size_t sites = x_side.size();
    if (n > sites) throw InvalidArgument("pair sample: more sites requested than available");
    n = std::min(n, kMaxProjectionSample);

    std::vector<std::size_t> idx(sites);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = make_rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);

    PCSample s;
    s.dim = patch * patch;
    const auto half = static_cast<std::ptrdiff_t>(patch / 2);
    for (auto site : idx) {
        const auto r = static_cast<std::ptrdiff_t>(site / x_side.width);
        const auto c = static_cast<std::ptrdiff_t>(site % x_side.width);
        s.scalars.push_back(x_side.values[site]);
        for (std::ptrdiff_t dr = -half; dr <= half; ++dr) {
            for (std::ptrdiff_t dc = -half; dc <= half; ++dc) {
                s.vectors.push_back(y_side.at(reflect_index(r + dr, y_side.height),
                                              reflect_index(c + dc, y_side.width)));
            }
        }
    }
    return s;
}

PCSample stack_pair_sample(const SubImageStack& stack, std::size_t first, std::size_t second,
                           const std::optional<DecorrelatorSpec>& decorrelator, std::size_t n,
                           std::uint64_t seed, std::size_t patch) {
    if (first >= stack.count() || second >= stack.count() || first == second) {
        throw InvalidArgument("pair sample: invalid sub-image indices");
    }
    const Raster x = decorrelator ? decorrelate(stack.subimages[first], *decorrelator).raster()
                                  : stack.subimages[first].raster();
    return aligned_pair_sample(x, stack.subimages[second].raster(), n, seed, patch);
}

PCStatistic pair_independence_probe(const IntensityImage& image, std::size_t k,
                                    std::uint64_t seed, const DecorrelatorSpec& spec,
                                    std::size_t n, std::size_t patch) {
    const auto stack = ra_sample(image, k, derive_seed(seed, {0}));
    const auto sample = stack_pair_sample(stack, 0, 1, spec, n, derive_seed(seed, {1}), patch);
    return projection_correlation(sample);
}

}  // namespace sdssar

namespace sdssar {

ConvergenceReport convergence_probe(std::optional<int> looks, const std::vector<std::size_t>& sizes,
                                    std::size_t trials, std::uint64_t seed) {
    if (sizes.size() < 2) throw InvalidArgument("convergence probe needs at least two sizes");
    if (trials < 2) throw InvalidArgument("convergence probe needs at least two trials");
    ConvergenceReport rep;
    rep.trials = trials;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        const std::size_t n = sizes[s];
        if (n == 0) throw InvalidArgument("convergence probe sizes must be positive");
        const auto clean = IntensityImage::constant(2 * n, 2, 1.0);
        double sum = 0.0, sum_sq = 0.0;
        for (std::size_t t = 0; t < trials; ++t) {
            const std::uint64_t ts = derive_seed(seed, {s, t});
            const IntensityImage y = looks ? apply_speckle(clean, *looks, ts) : clean;
            const auto stack = ra_sample(y, 2, derive_seed(ts, {1}));
            const double d = mean(stack.subimages[0].pixels()) - mean(stack.subimages[1].pixels());
            sum += d * d;
            sum_sq += d * d * d * d;
        }
        const double m = sum / static_cast<double>(trials);
        const double var = std::max(0.0, (sum_sq - trials * m * m) / static_cast<double>(trials - 1));
        rep.points.push_back({n, m, std::sqrt(var / static_cast<double>(trials))});
    }

    const bool any_zero = std::any_of(rep.points.begin(), rep.points.end(),
                                      [](const ConvergencePoint& p) { return !(p.mean_sq_diff > 0.0); });
    if (any_zero) return rep;  // noise-free: nothing to fit
    const std::size_t k = rep.points.size();
    double xm = 0.0, ym = 0.0;
    for (const auto& p : rep.points) {
        xm += std::log(static_cast<double>(p.pairs));
        ym += std::log(p.mean_sq_diff);
    }
    xm /= static_cast<double>(k);
    ym /= static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : rep.points) {
        const double dx = std::log(static_cast<double>(p.pairs)) - xm;
        sxx += dx * dx;
        sxy += dx * (std::log(p.mean_sq_diff) - ym);
    }
    if (!(sxx > 0.0)) throw InvalidArgument("convergence probe sizes must differ");
    rep.slope = sxy / sxx;
    rep.intercept = ym - rep.slope * xm;
    // var(log m) ~ (se / m)^2; the slope is linear in the log estimates.
    double var_slope = 0.0;
    for (const auto& p : rep.points) {
        const double w = (std::log(static_cast<double>(p.pairs)) - xm) / sxx;
        const double rel = p.std_error / p.mean_sq_diff;
        var_slope += w * w * rel * rel;
    }
    const double half = 1.959963984540054 * std::sqrt(var_slope);
    rep.slope_ci_low = rep.slope - half;
    rep.slope_ci_high = rep.slope + half;
    return rep;
}

}  // namespace sdssar

#include "sdssar/speckle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdssar/errors.hpp"

namespace sdssar {

double sample_unit_gamma(Rng& rng, int looks) {
    if (looks < 1) throw InvalidArgument("looks must be >= 1");
    // Marsaglia & Tsang (2000) for shape >= 1.
    const double d = static_cast<double>(looks) - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (;;) {
        double x;
        double v;
        do {
            x = normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform(rng);
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2 ||
            std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
            return d * v / static_cast<double>(looks);
        }
    }
}

SpeckleField sample_speckle(std::size_t width, std::size_t height, int looks,
                            std::uint64_t seed) {
    if (looks < 1) throw InvalidArgument("looks must be >= 1");
    if (width == 0 || height == 0) throw InvalidArgument("speckle field needs positive dimensions");
    SpeckleField field{width, height, looks, {}};
    field.samples.resize(width * height);
    auto rng = make_rng(seed);
    for (double& s : field.samples) {
        // Gamma draws underflow to 0 with negligible probability; keep the
        // samples strictly positive.
        s = std::max(sample_unit_gamma(rng, looks), std::numeric_limits<double>::min());
    }
    return field;
}

IntensityImage apply_speckle(const IntensityImage& clean, int looks, std::uint64_t seed) {
    const auto field = sample_speckle(clean.width(), clean.height(), looks, seed);
    Raster out(clean.width(), clean.height());
    const auto px = clean.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) out.values[i] = px[i] * field.samples[i];
    return IntensityImage(std::move(out), looks);
}

Raster additive_residual(const IntensityImage& speckled, const IntensityImage& clean) {
    if (!speckled.same_shape(clean)) throw InvalidArgument("additive_residual: shape mismatch");
    Raster out(clean.width(), clean.height());
    const auto y = speckled.pixels();
    const auto x = clean.pixels();
    for (std::size_t i = 0; i < y.size(); ++i) out.values[i] = y[i] - x[i];
    return out;
}

SdcReport sdc_check(const IntensityImage& a, const IntensityImage& b, double tolerance) {
    if (a.empty() || b.empty()) throw InvalidArgument("sdc_check: empty image");
    if (!(tolerance >= 0.0)) throw InvalidArgument("sdc_check: tolerance must be >= 0");
    SdcReport r;
    r.mean_a = mean(a.pixels());
    r.mean_b = mean(b.pixels());
    if (r.mean_a < kSdcEpsilon && r.mean_b < kSdcEpsilon) {
        throw DegenerateInput("sdc_check: both images have (near) zero mean");
    }
    r.relative_gap = std::abs(r.mean_a - r.mean_b) / std::max({r.mean_a, r.mean_b, kSdcEpsilon});
    r.tolerance = tolerance;
    r.pass = r.relative_gap <= tolerance;
    return r;
}

}  // namespace sdssar

#pragma once

#include <cstdint>

#include "sdssar/image.hpp"
#include "sdssar/rng.hpp"

namespace sdssar {

/// Multiplicative speckle gains, i.i.d. Gamma(shape = L, scale = 1/L):
/// unit mean, variance 1/L.
struct SpeckleField {
    std::size_t width = 0;
    std::size_t height = 0;
    int looks = 1;
    std::vector<double> samples;
};

/// One Gamma(L, 1/L) draw (Marsaglia-Tsang squeeze/rejection, exact for L >= 1).
double sample_unit_gamma(Rng& rng, int looks);

SpeckleField sample_speckle(std::size_t width, std::size_t height, int looks,
                            std::uint64_t seed);

/// Y = X * N with a fresh speckle field. The result carries `looks`.
IntensityImage apply_speckle(const IntensityImage& clean, int looks, std::uint64_t seed);

/// N' = Y - X, the additive reformulation of the multiplicative model.
Raster additive_residual(const IntensityImage& speckled, const IntensityImage& clean);

inline constexpr double kSdcEpsilon = 1e-12;

struct SdcReport {
    double mean_a = 0.0;
    double mean_b = 0.0;
    double relative_gap = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Checks that two images share the same expected intensity (global means
/// agree to a relative tolerance). Shapes may differ.
SdcReport sdc_check(const IntensityImage& a, const IntensityImage& b, double tolerance);

}  // namespace sdssar

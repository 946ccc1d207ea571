#pragma once

#include <cstdint>
#include <vector>

#include "sdssar/image.hpp"

namespace sdssar {

/// Provenance of every sub-image pixel: entry [j * sub_size + p] holds the
/// source (row, col) of pixel p (raster order) of sub-image j.
struct PositionMap {
    std::vector<std::uint32_t> rows;
    std::vector<std::uint32_t> cols;

    std::size_t size() const noexcept { return rows.size(); }
};

/// The k*k sub-images of one sampled image. Immutable once built.
struct SubImageStack {
    std::size_t k = 2;
    std::size_t source_width = 0;   ///< cropped source width (multiple of k)
    std::size_t source_height = 0;  ///< cropped source height (multiple of k)
    std::vector<IntensityImage> subimages;
    PositionMap positions;

    std::size_t sub_width() const noexcept { return source_width / k; }
    std::size_t sub_height() const noexcept { return source_height / k; }
    std::size_t sub_size() const noexcept { return sub_width() * sub_height(); }
    std::size_t count() const noexcept { return subimages.size(); }

    /// Throws CorruptedStack if the shape or bijection invariants fail.
    void validate() const;
};

/// Random-aware sub-sampling: k x k patches, an independent uniform shuffle
/// inside every patch, then slot j of each patch goes to sub-image j.
/// Trailing rows/cols that do not fill a patch are cropped.
SubImageStack ra_sample(const IntensityImage& image, std::size_t k, std::uint64_t seed);

/// Baseline: same partition but slot j is always raster position j in the patch.
SubImageStack ordered_sample(const IntensityImage& image, std::size_t k);

/// Inverse of sampling: scatters each sub-image pixel back to its recorded
/// source position. Works for any rasters laid out like the stack's
/// sub-images, so it also maps network outputs.
Raster global_upsample(const SubImageStack& layout, const std::vector<Raster>& subimages);
IntensityImage global_upsample(const SubImageStack& stack);

/// Adjoint of global_upsample: gathers a full-size raster into per-sub-image rasters.
std::vector<Raster> gather_to_subimages(const SubImageStack& layout, const Raster& full);

/// Crop used by the samplers (first floor(H/k)*k rows, floor(W/k)*k cols).
IntensityImage sampler_crop(const IntensityImage& image, std::size_t k);

/// Low-pass decorrelator H(f) = A / (B + (f/fc)^(2*order)) for f <= fc, 0 beyond.
/// f is the radial DFT bin index on a grid scaled so both axes use
/// max(W, H) bins; the diagonal Nyquist therefore sits at max(W, H)/sqrt(2).
struct DecorrelatorSpec {
    double cutoff = 240.0;
    double gain = 1.0;    ///< A
    double offset = 1.0;  ///< B
    int order = 2;        ///< N, the exponent is 2N

    void validate() const;
    double response(double radial_frequency) const;
};

/// Filtered raster without the final clamp (may contain negative ringing).
Raster decorrelate_unclamped(const Raster& image, const DecorrelatorSpec& spec);
IntensityImage decorrelate(const IntensityImage& image, const DecorrelatorSpec& spec);

/// Radial frequency of DFT bin (u along width, v along height).
double radial_frequency(std::size_t u, std::size_t v, std::size_t width, std::size_t height);

}  // namespace sdssar

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdssar/image.hpp"

namespace sdssar {

inline constexpr double kMetricEpsilon = 1e-12;

struct Region {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t area() const noexcept { return height * width; }
    /// Throws InvalidArgument when out of bounds or area < 2.
    void validate(const IntensityImage& image) const;
    static Region whole(const IntensityImage& image);
};

std::vector<double> region_pixels(const IntensityImage& image, const Region& region);

/// mean^2 / population variance over the region.
double enl(const IntensityImage& image, const Region& region);

/// |20 log10(max/mean) of the despeckled patch - same for the speckled patch|, dB.
double tcr(const IntensityImage& despeckled, const IntensityImage& speckled,
           const Region& region);

/// mean(speckled / max(despeckled, eps)).
double mor(const IntensityImage& speckled, const IntensityImage& despeckled);
double mor(const IntensityImage& speckled, const IntensityImage& despeckled,
           const Region& region);

enum class Direction { horizontal, vertical };

/// sum |D(i)/D(i+1)| / sum |O(i)/O(i+1)| over adjacent pixel pairs along
/// `direction`, denominators floored at eps.
double epd_roa(const IntensityImage& despeckled, const IntensityImage& original,
               Direction direction);

/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
/// peak defaults to max(clean) - min(clean) (or max(clean) for a flat clean image).
double psnr(const IntensityImage& test, const IntensityImage& clean,
            std::optional<double> peak = std::nullopt);

/// Mean SSIM over all 8x8 windows (stride 1), K1 = 0.01, K2 = 0.03. Without
/// an explicit peak the wider dynamic range of the two images is used, which
/// keeps the index symmetric. Images smaller than a window use one window.
double ssim(const IntensityImage& a, const IntensityImage& b,
            std::optional<double> peak = std::nullopt);

struct MetricsReport {
    std::optional<double> enl;
    std::vector<double> enl_per_region;
    std::optional<double> enl_original;
    std::optional<double> tcr;
    std::optional<double> mor;
    std::optional<double> epd_roa_h;
    std::optional<double> epd_roa_v;
    std::optional<double> epd_roa;
    std::optional<double> psnr;
    std::optional<double> ssim;
    std::vector<std::pair<std::string, std::string>> errors;  ///< metric -> message
};

struct EvaluationInputs {
    const IntensityImage* original = nullptr;
    const IntensityImage* despeckled = nullptr;
    const IntensityImage* clean = nullptr;  ///< synthetic track only
    std::vector<Region> homogeneous;        ///< ENL regions
    std::optional<Region> target;           ///< TCR patch; whole image when absent
    std::optional<double> peak;
};

/// Computes every metric it can; degenerate metrics are recorded in `errors`.
MetricsReport evaluate(const EvaluationInputs& in);

}  // namespace sdssar

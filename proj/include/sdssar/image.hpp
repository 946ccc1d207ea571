#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace sdssar {

/// Real-valued row-major 2-D raster. Values may be negative; used for
/// residuals, difference images and network activations in the training
/// domain.
struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    Raster() = default;
    Raster(std::size_t w, std::size_t h, double fill = 0.0);
    Raster(std::size_t w, std::size_t h, std::vector<double> v);

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }
    bool same_shape(const Raster& other) const noexcept {
        return width == other.width && height == other.height;
    }

    double& at(std::size_t row, std::size_t col) { return values[row * width + col]; }
    double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }

    friend bool operator==(const Raster&, const Raster&) = default;
};

/// Nonnegative intensity raster (linear scale). Every pixel is finite and
/// >= 0; the constructor enforces it.
class IntensityImage {
public:
    IntensityImage() = default;
    IntensityImage(std::size_t width, std::size_t height, std::vector<double> pixels,
                   std::optional<int> looks = std::nullopt);
    explicit IntensityImage(Raster raster, std::optional<int> looks = std::nullopt);

    /// Builds an image from an arbitrary raster, replacing negative values by 0.
    /// Non-finite values still throw.
    static IntensityImage clamped(Raster raster, std::optional<int> looks = std::nullopt);

    static IntensityImage constant(std::size_t width, std::size_t height, double value);

    std::size_t width() const noexcept { return raster_.width; }
    std::size_t height() const noexcept { return raster_.height; }
    std::size_t size() const noexcept { return raster_.size(); }
    bool empty() const noexcept { return raster_.empty(); }

    std::span<const double> pixels() const noexcept { return raster_.values; }
    double at(std::size_t row, std::size_t col) const { return raster_.at(row, col); }
    const Raster& raster() const noexcept { return raster_; }

    std::optional<int> looks() const noexcept { return looks_; }
    void set_looks(std::optional<int> looks);

    bool same_shape(const IntensityImage& other) const noexcept {
        return raster_.same_shape(other.raster_);
    }

    /// Top-left crop.
    IntensityImage crop(std::size_t row, std::size_t col, std::size_t height,
                        std::size_t width) const;

    friend bool operator==(const IntensityImage&, const IntensityImage&) = default;

private:
    Raster raster_;
    std::optional<int> looks_;
};

double mean(std::span<const double> values);
/// Population variance.
double variance(std::span<const double> values);

}  // namespace sdssar

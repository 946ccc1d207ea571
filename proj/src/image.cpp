#include "sdssar/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdssar/errors.hpp"

namespace sdssar {

Raster::Raster(std::size_t w, std::size_t h, double fill)
    : width(w), height(h), values(w * h, fill) {}

Raster::Raster(std::size_t w, std::size_t h, std::vector<double> v)
    : width(w), height(h), values(std::move(v)) {
    if (values.size() != w * h) {
        throw InvalidArgument("raster of " + std::to_string(w) + "x" + std::to_string(h) +
                              " given " + std::to_string(values.size()) + " values");
    }
}

namespace {

void check_looks(std::optional<int> looks) {
    if (looks && *looks < 1) throw InvalidArgument("looks must be >= 1");
}

}  // namespace

IntensityImage::IntensityImage(std::size_t width, std::size_t height, std::vector<double> pixels,
                               std::optional<int> looks)
    : IntensityImage(Raster(width, height, std::move(pixels)), looks) {}

IntensityImage::IntensityImage(Raster raster, std::optional<int> looks)
    : raster_(std::move(raster)), looks_(looks) {
    check_looks(looks);
    for (std::size_t i = 0; i < raster_.size(); ++i) {
        const double v = raster_.values[i];
        if (!std::isfinite(v) || v < 0.0) {
            throw InvalidArgument("intensity pixel " + std::to_string(i) +
                                  " is negative or not finite");
        }
    }
}

IntensityImage IntensityImage::clamped(Raster raster, std::optional<int> looks) {
    for (double& v : raster.values) {
        if (!std::isfinite(v)) throw NumericOverflow("non-finite value in raster");
        v = std::max(v, 0.0);
    }
    return IntensityImage(std::move(raster), looks);
}

IntensityImage IntensityImage::constant(std::size_t width, std::size_t height, double value) {
    return IntensityImage(Raster(width, height, value));
}

void IntensityImage::set_looks(std::optional<int> looks) {
    check_looks(looks);
    looks_ = looks;
}

IntensityImage IntensityImage::crop(std::size_t row, std::size_t col, std::size_t h,
                                    std::size_t w) const {
    if (row + h > height() || col + w > width()) throw InvalidArgument("crop out of bounds");
    Raster out(w, h);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) out.at(r, c) = raster_.at(row + r, col + c);
    return IntensityImage(std::move(out), looks_);
}

double mean(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("mean of empty sequence");
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
}

double variance(std::span<const double> values) {
    const double m = mean(values);
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return s / static_cast<double>(values.size());
}

}  // namespace sdssar

#include "sdssar/textures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sdssar/errors.hpp"
#include "sdssar/rng.hpp"

namespace sdssar {

namespace {

constexpr double kLow = 0.1;
constexpr double kHigh = 1.0;

Raster smooth_noise(std::size_t w, std::size_t h, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> freq(0.5, 3.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> amp(0.0, 1.0);
    Raster out(w, h);
    for (int term = 0; term < 6; ++term) {
        const double fx = freq(rng) / static_cast<double>(w);
        const double fy = freq(rng) / static_cast<double>(h);
        const double ph = phase(rng);
        const double a = amp(rng);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c)
                out.at(r, c) += a * std::sin(2.0 * std::numbers::pi * (fx * c + fy * r) + ph);
    }
    const auto [lo, hi] = std::minmax_element(out.values.begin(), out.values.end());
    const double l = *lo, span = std::max(*hi - *lo, 1e-12);
    for (double& v : out.values) v = kLow + (kHigh - kLow) * (v - l) / span;
    return out;
}

Raster blocks(std::size_t w, std::size_t h, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> level(kLow, kHigh);
    Raster out(w, h, level(rng));
    const std::size_t n = 4 + (w * h) / 512;
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> rw(std::max<std::size_t>(1, w / 8), std::max<std::size_t>(1, w / 2));
        std::uniform_int_distribution<std::size_t> rh(std::max<std::size_t>(1, h / 8), std::max<std::size_t>(1, h / 2));
        const std::size_t bw = rw(rng), bh = rh(rng);
        std::uniform_int_distribution<std::size_t> rc(0, w - bw), rr(0, h - bh);
        const std::size_t c0 = rc(rng), r0 = rr(rng);
        const double v = level(rng);
        for (std::size_t r = r0; r < r0 + bh; ++r)
            for (std::size_t c = c0; c < c0 + bw; ++c) out.at(r, c) = v;
    }
    return out;
}

Raster texture_raster(TextureKind kind, std::size_t w, std::size_t h, std::uint64_t seed) {
    switch (kind) {
        case TextureKind::flat:
            return Raster(w, h, 0.5);
        case TextureKind::checkerboard: {
            const std::size_t cell = std::max<std::size_t>(2, std::min(w, h) / 8);
            Raster out(w, h);
            for (std::size_t r = 0; r < h; ++r)
                for (std::size_t c = 0; c < w; ++c)
                    out.at(r, c) = ((r / cell + c / cell) % 2) ? 0.8 : 0.2;
            return out;
        }
        case TextureKind::ramp: {
            const double step = w > 1 ? (kHigh - kLow) / static_cast<double>(w - 1) : 0.0;
            return make_ramp(w, h, kLow, step).raster();
        }
        case TextureKind::smooth_noise:
            return smooth_noise(w, h, seed);
        case TextureKind::blocks:
            return blocks(w, h, seed);
        case TextureKind::composite: {
            // Blocks on the left half, smooth field on the right, a few bright points.
            Raster out = blocks(w, h, seed);
            const Raster s = smooth_noise(w, h, mix64(seed ^ 0x5c3e));
            for (std::size_t r = 0; r < h; ++r)
                for (std::size_t c = w / 2; c < w; ++c) out.at(r, c) = s.at(r, c);
            auto rng = make_rng(mix64(seed ^ 0x7a47));
            std::uniform_int_distribution<std::size_t> rr(0, h - 1), rc(0, w - 1);
            for (int i = 0; i < 3; ++i) out.at(rr(rng), rc(rng)) = kHigh;
            return out;
        }
    }
    throw InvalidArgument("unknown texture kind");
}

}  // namespace

std::string to_string(TextureKind kind) {
    switch (kind) {
        case TextureKind::flat: return "flat";
        case TextureKind::checkerboard: return "checkerboard";
        case TextureKind::ramp: return "ramp";
        case TextureKind::smooth_noise: return "smooth_noise";
        case TextureKind::blocks: return "blocks";
        case TextureKind::composite: return "composite";
    }
    return "?";
}

TextureKind texture_from_string(const std::string& name) {
    for (auto k : {TextureKind::flat, TextureKind::checkerboard, TextureKind::ramp,
                   TextureKind::smooth_noise, TextureKind::blocks, TextureKind::composite}) {
        if (to_string(k) == name) return k;
    }
    throw InvalidArgument("unknown texture: " + name);
}

IntensityImage make_texture(TextureKind kind, std::size_t width, std::size_t height,
                            std::uint64_t seed) {
    if (width == 0 || height == 0) throw InvalidArgument("texture size must be positive");
    return IntensityImage(texture_raster(kind, width, height, seed));
}

IntensityImage make_ramp(std::size_t width, std::size_t height, double offset, double step) {
    Raster out(width, height);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) out.at(r, c) = offset + step * static_cast<double>(c);
    return IntensityImage(std::move(out));
}

std::vector<IntensityImage> make_corpus(std::size_t count, std::size_t size, std::uint64_t seed) {
    static constexpr TextureKind kinds[] = {TextureKind::composite, TextureKind::blocks,
                                            TextureKind::smooth_noise, TextureKind::checkerboard};
    std::vector<IntensityImage> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(make_texture(kinds[i % 4], size, size, derive_seed(seed, {i})));
    }
    return out;
}

IntensityImage make_evaluation_scene(std::size_t size, std::uint64_t seed, std::size_t* flat_row,
                                     std::size_t* flat_col, std::size_t* flat_side) {
    if (size < 16) throw InvalidArgument("evaluation scene must be at least 16 pixels");
    Raster out = texture_raster(TextureKind::composite, size, size, seed);
    const std::size_t side = size * 3 / 8;
    const std::size_t r0 = size / 16, c0 = size / 16;
    for (std::size_t r = r0; r < r0 + side; ++r)
        for (std::size_t c = c0; c < c0 + side; ++c) out.at(r, c) = 0.6;
    if (flat_row) *flat_row = r0;
    if (flat_col) *flat_col = c0;
    if (flat_side) *flat_side = side;
    return IntensityImage(std::move(out));
}

}  // namespace sdssar

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "sdssar/errors.hpp"
#include "sdssar/sampler.hpp"
#include "sdssar/speckle.hpp"
#include "sdssar/stack_io.hpp"
#include "sdssar/textures.hpp"

using namespace sdssar;
namespace fs = std::filesystem;

namespace {

IntensityImage grid2x2() { return IntensityImage(2, 2, {1, 2, 3, 4}); }

IntensityImage random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    Raster r(w, h);
    for (double& v : r.values) v = u(rng);
    return IntensityImage(r);
}

std::vector<double> sorted_stack_pixels(const SubImageStack& s) {
    std::vector<double> all;
    for (const auto& img : s.subimages) all.insert(all.end(), img.pixels().begin(), img.pixels().end());
    std::sort(all.begin(), all.end());
    return all;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

}  // namespace

TEST_CASE("single patch: ra_sample permutes, ordered_sample keeps raster order") {
    const auto ra = ra_sample(grid2x2(), 2, 3);
    REQUIRE(ra.count() == 4);
    std::vector<double> vals;
    for (const auto& s : ra.subimages) {
        CHECK(s.size() == 1);
        vals.push_back(s.at(0, 0));
    }
    std::sort(vals.begin(), vals.end());
    CHECK(vals == std::vector<double>{1, 2, 3, 4});

    const auto ord = ordered_sample(grid2x2(), 2);
    for (std::size_t j = 0; j < 4; ++j) CHECK(ord.subimages[j].at(0, 0) == static_cast<double>(j + 1));
    // Hand placement of the scatter.
    CHECK(global_upsample(ord) == grid2x2());
    CHECK(ord.positions.rows == std::vector<std::uint32_t>{0, 0, 1, 1});
    CHECK(ord.positions.cols == std::vector<std::uint32_t>{0, 1, 0, 1});
}

TEST_CASE("partition and round-trip properties over random shapes, k and seeds") {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 300; ++t) {
        const std::size_t k = 2 + rng() % 3;
        const std::size_t w = k + rng() % 37;
        const std::size_t h = k + rng() % 29;
        const auto img = random_image(w, h, rng());
        const auto stack = ra_sample(img, k, rng());
        const auto crop = sampler_crop(img, k);
        CHECK(stack.count() == k * k);
        CHECK(stack.sub_width() == w / k);
        CHECK(stack.sub_height() == h / k);
        std::vector<double> src(crop.pixels().begin(), crop.pixels().end());
        std::sort(src.begin(), src.end());
        CHECK(sorted_stack_pixels(stack) == src);
        CHECK(global_upsample(stack) == crop);
        CHECK_NOTHROW(stack.validate());
    }
}

TEST_CASE("64x64 round trip is bit exact over 100 seeds") {
    const auto img = random_image(64, 64, 77);
    for (std::uint64_t s = 0; s < 100; ++s) CHECK(global_upsample(ra_sample(img, 2, s)) == img);
}

TEST_CASE("ra_sample is deterministic per seed and rejects tiny images") {
    const auto img = random_image(10, 8, 1);
    const auto a = ra_sample(img, 2, 5);
    const auto b = ra_sample(img, 2, 5);
    CHECK(a.positions.rows == b.positions.rows);
    CHECK(a.positions.cols == b.positions.cols);
    CHECK(ra_sample(img, 2, 6).positions.rows != a.positions.rows);
    CHECK_THROWS_AS(ra_sample(IntensityImage::constant(1, 5, 1.0), 2, 0), InvalidArgument);
    CHECK_THROWS_AS(ra_sample(img, 1, 0), InvalidArgument);
}

TEST_CASE("gather_to_subimages is the adjoint of global_upsample") {
    const auto stack = ra_sample(random_image(12, 10, 3), 2, 9);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<Raster> subs;
    for (std::size_t j = 0; j < 4; ++j) {
        Raster r(stack.sub_width(), stack.sub_height());
        for (double& v : r.values) v = g(rng);
        subs.push_back(r);
    }
    Raster full(stack.source_width, stack.source_height);
    for (double& v : full.values) v = g(rng);
    const Raster up = global_upsample(stack, subs);
    const auto down = gather_to_subimages(stack, full);
    double lhs = 0, rhs = 0;
    for (std::size_t p = 0; p < full.size(); ++p) lhs += up.values[p] * full.values[p];
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t p = 0; p < subs[j].size(); ++p) rhs += subs[j].values[p] * down[j].values[p];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("corrupted position maps are rejected") {
    auto stack = ra_sample(random_image(6, 6, 2), 2, 1);
    stack.positions.rows[0] = stack.positions.rows[1];
    stack.positions.cols[0] = stack.positions.cols[1];
    CHECK_THROWS_AS(stack.validate(), CorruptedStack);
    CHECK_THROWS_AS(global_upsample(stack), CorruptedStack);
}

TEST_CASE("ordered sampler on a ramp: constant difference equal to the step") {
    const auto ramp = make_ramp(64, 64, 0.1, 0.01);
    const auto ord = ordered_sample(ramp, 2);
    for (std::size_t p = 0; p < ord.subimages[0].size(); ++p) {
        CHECK(ord.subimages[0].pixels()[p] - ord.subimages[1].pixels()[p] == doctest::Approx(-0.01).epsilon(1e-9));
    }
    const auto ra = ra_sample(ramp, 2, 0);
    auto diff_mean = [](const SubImageStack& s) {
        double d = 0;
        for (std::size_t p = 0; p < s.subimages[0].size(); ++p) d += s.subimages[0].pixels()[p] - s.subimages[1].pixels()[p];
        return std::abs(d / s.subimages[0].size());
    };
    CHECK(diff_mean(ord) >= 10.0 * diff_mean(ra));
}

TEST_CASE("sub-image difference of homogeneous speckle has near-zero mean") {
    // 256x256 L=1: mean(y1 - y2) has standard deviation sqrt(2 / 128^2) ~ 0.011;
    // check at four standard errors for every pair, on two seeds.
    const auto flat = IntensityImage::constant(256, 256, 1.0);
    for (std::uint64_t seed : {1u, 2u}) {
        const auto y = apply_speckle(flat, 1, seed);
        const auto st = ra_sample(y, 2, seed + 10);
        const double n = static_cast<double>(st.sub_size());
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i + 1; j < 4; ++j) {
                double d = 0;
                for (std::size_t p = 0; p < st.sub_size(); ++p) d += st.subimages[i].pixels()[p] - st.subimages[j].pixels()[p];
                CHECK(std::abs(d / n) / mean(y.pixels()) < 4.0 * std::sqrt(2.0 / n));
            }
    }
}

TEST_CASE("sub-images of i.i.d. noise are exchangeable (two-sample KS)") {
    const auto y = apply_speckle(IntensityImage::constant(128, 128, 1.0), 2, 31);
    const auto st = ra_sample(y, 2, 8);
    const double n = static_cast<double>(st.sub_size());
    const double crit = 1.63 * std::sqrt(2.0 / n);  // alpha = 0.01
    for (std::size_t i = 1; i < 4; ++i) {
        std::vector<double> a(st.subimages[0].pixels().begin(), st.subimages[0].pixels().end());
        std::vector<double> b(st.subimages[i].pixels().begin(), st.subimages[i].pixels().end());
        CHECK(ks_two_sample(a, b) < crit);
    }
}

TEST_CASE("decorrelator matches the naive DFT oracle") {
    const auto img = random_image(9, 6, 12);
    for (const DecorrelatorSpec spec : {DecorrelatorSpec{3.0, 1.0, 1.0, 2}, DecorrelatorSpec{5.5, 2.0, 0.5, 1},
                                        DecorrelatorSpec{240.0, 1.0, 1.0, 2}}) {
        const Raster got = decorrelate_unclamped(img.raster(), spec);
        const Raster want = oracle::lowpass(img.raster(), spec.cutoff, spec.gain, spec.offset, spec.order);
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.values[i] == doctest::Approx(want.values[i]).epsilon(1e-10));
    }
    for (std::size_t u = 0; u < 9; ++u)
        for (std::size_t v = 0; v < 6; ++v) CHECK(radial_frequency(u, v, 9, 6) == doctest::Approx(oracle::radial(u, v, 9, 6)));
}

TEST_CASE("decorrelator: constant passes, single bin beyond cutoff vanishes, linear") {
    const auto flat = IntensityImage::constant(16, 16, 3.0);
    const auto out = decorrelate(flat, DecorrelatorSpec{});
    for (double v : out.pixels()) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));

    // cos at bin (8, 0) of a 16x16 grid: radial frequency 8 > cutoff 4.
    Raster wave(16, 16);
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 16; ++c) wave.at(r, c) = std::cos(std::numbers::pi * static_cast<double>(c));
    const Raster gone = decorrelate_unclamped(wave, DecorrelatorSpec{4.0, 1.0, 1.0, 2});
    for (double v : gone.values) CHECK(std::abs(v) < 1e-12);

    const auto img = random_image(12, 12, 5);
    const DecorrelatorSpec spec{3.0, 1.0, 1.0, 2};
    Raster scaled = img.raster();
    for (double& v : scaled.values) v *= 2.5;
    const Raster a = decorrelate_unclamped(scaled, spec);
    const Raster b = decorrelate_unclamped(img.raster(), spec);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.values[i] == doctest::Approx(2.5 * b.values[i]).epsilon(1e-10));

    CHECK_THROWS_AS(DecorrelatorSpec({0.0, 1.0, 1.0, 2}).validate(), InvalidArgument);
    CHECK_THROWS_AS(DecorrelatorSpec({1.0, 1.0, 1.0, 0}).validate(), InvalidArgument);
}

TEST_CASE("decorrelator removes white-noise energy above the cutoff") {
    const std::size_t n = 24;
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    Raster noise(n, n);
    for (double& v : noise.values) v = g(rng);
    const double fc = 6.0;
    const Raster out = decorrelate_unclamped(noise, DecorrelatorSpec{fc, 1.0, 1.0, 2});
    auto band_energy = [&](const Raster& r) {
        std::vector<oracle::cd> x(r.values.begin(), r.values.end());
        const auto s = oracle::dft2(x, n, n, -1);
        double e = 0;
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t u = 0; u < n; ++u)
                if (oracle::radial(u, v, n, n) > fc) e += std::norm(s[v * n + u]);
        return e;
    };
    CHECK(band_energy(out) < 1e-6 * band_energy(noise));
}

TEST_CASE("stack directory round trip and corruption") {
    const fs::path dir = fs::temp_directory_path() / "sdssar_test_stack";
    fs::remove_all(dir);
    const auto stack = ra_sample(random_image(14, 10, 8), 2, 3);
    write_stack(dir, stack);
    const auto back = read_stack(dir);
    CHECK(back.k == 2);
    CHECK(back.positions.rows == stack.positions.rows);
    CHECK(back.positions.cols == stack.positions.cols);
    // Raw files hold float32, so values round-trip at float precision.
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t p = 0; p < stack.sub_size(); ++p)
            CHECK(back.subimages[j].pixels()[p] == doctest::Approx(stack.subimages[j].pixels()[p]).epsilon(1e-6));
    CHECK(fs::file_size(dir / "positions.bin") == 12 * stack.positions.size());

    {
        std::fstream f(dir / "positions.bin", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const std::uint32_t bad = 9999;
        f.write(reinterpret_cast<const char*>(&bad), 4);
    }
    CHECK_THROWS_AS(read_stack(dir), CorruptedStack);
    fs::resize_file(dir / "positions.bin", 10);
    CHECK_THROWS_AS(read_stack(dir), CorruptedStack);
    fs::remove(dir / "manifest.json");
    CHECK_THROWS_AS(read_stack(dir), CorruptedStack);
}

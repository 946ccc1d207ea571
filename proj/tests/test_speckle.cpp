#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "sdssar/errors.hpp"
#include "sdssar/image_io.hpp"
#include "sdssar/speckle.hpp"
#include "sdssar/textures.hpp"

using namespace sdssar;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "sdssar_test_speckle";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("intensity image rejects negative and non-finite pixels") {
    CHECK_THROWS_AS(IntensityImage(2, 1, {1.0, -0.5}), InvalidArgument);
    CHECK_THROWS_AS(IntensityImage(2, 1, {1.0, NAN}), InvalidArgument);
    CHECK_THROWS_AS(IntensityImage(2, 2, {1.0, 2.0}), InvalidArgument);
    const auto c = IntensityImage::clamped(Raster(2, 1, std::vector<double>{-1.0, 3.0}));
    CHECK(c.at(0, 0) == 0.0);
    CHECK(c.at(0, 1) == 3.0);
}

TEST_CASE("sample_speckle: unit mean and variance at L = 1") {
    const auto f = sample_speckle(1000, 1000, 1, 0);
    const double m = mean(f.samples);
    const double v = variance(f.samples);
    CHECK(std::abs(m - 1.0) < 0.01);
    CHECK(std::abs(v - 1.0) < 0.05);
    CHECK(std::all_of(f.samples.begin(), f.samples.end(), [](double s) { return s > 0.0; }));
}

TEST_CASE("sample_speckle: variance 1/L for L in {1,2,4,8}") {
    for (int L : {1, 2, 4, 8}) {
        const auto f = sample_speckle(1000, 1000, L, 100 + L);
        CHECK(std::abs(mean(f.samples) - 1.0) < 0.01);
        CHECK(std::abs(variance(f.samples) - 1.0 / L) < 0.05 / L);
    }
}

TEST_CASE("sample_speckle: KS distance to the Gamma(4, 1/4) CDF") {
    auto f = sample_speckle(1000, 1000, 4, 3);
    std::sort(f.samples.begin(), f.samples.end());
    const double n = static_cast<double>(f.samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < f.samples.size(); i += 7) {
        const double F = oracle::gamma_p(4.0, 4.0 * f.samples[i]);
        d = std::max({d, std::abs(F - i / n), std::abs(F - (i + 1) / n)});
    }
    CHECK(d < 0.005);
}

TEST_CASE("sample_speckle: determinism and argument checks") {
    const auto a = sample_speckle(2, 2, 4, 7);
    const auto b = sample_speckle(2, 2, 4, 7);
    CHECK(a.samples == b.samples);
    CHECK(sample_speckle(2, 2, 4, 8).samples != a.samples);
    CHECK_THROWS_AS(sample_speckle(2, 2, 0, 1), InvalidArgument);
    CHECK_THROWS_AS(sample_speckle(0, 2, 1, 1), InvalidArgument);
}

TEST_CASE("apply_speckle: zeros stay zero, mean preserved, deterministic") {
    const auto zero = IntensityImage::constant(16, 16, 0.0);
    const auto z = apply_speckle(zero, 1, 5);
    CHECK(std::all_of(z.pixels().begin(), z.pixels().end(), [](double v) { return v == 0.0; }));

    const auto flat = IntensityImage::constant(400, 250, 100.0);
    const auto y = apply_speckle(flat, 1, 11);
    CHECK(std::abs(mean(y.pixels()) - 100.0) < 1.0);
    CHECK(y.looks() == 1);
    CHECK(apply_speckle(flat, 1, 11) == y);
}

TEST_CASE("apply_speckle: Monte-Carlo mean within 3 sigma for several L") {
    const auto clean = make_texture(TextureKind::smooth_noise, 128, 128, 4);
    const double m = mean(clean.pixels());
    for (int L : {1, 3, 8}) {
        const auto y = apply_speckle(clean, L, 40 + L);
        // Var of the mean: sum x_i^2 / (L n^2).
        double sq = 0.0;
        for (double v : clean.pixels()) sq += v * v;
        const double n = static_cast<double>(clean.size());
        const double sigma = std::sqrt(sq / L) / n;
        CHECK(std::abs(mean(y.pixels()) - m) < 3.0 * sigma);
    }
}

TEST_CASE("additive_residual") {
    const IntensityImage one(1, 1, {3.0});
    const IntensityImage two(1, 1, {2.0});
    CHECK(additive_residual(one, two).values[0] == 1.0);
    const auto y = apply_speckle(IntensityImage::constant(400, 250, 50.0), 2, 9);
    const auto r = additive_residual(y, y);
    CHECK(std::all_of(r.values.begin(), r.values.end(), [](double v) { return v == 0.0; }));
    const auto x = IntensityImage::constant(400, 250, 50.0);
    const auto res = additive_residual(y, x);
    CHECK(std::abs(mean(res.values)) < 0.5);
    // 4 standard errors: c / sqrt(L n).
    CHECK(std::abs(mean(res.values)) < 4.0 * 50.0 / std::sqrt(2.0 * 1e5));
    CHECK_THROWS_AS(additive_residual(one, x), InvalidArgument);
}

TEST_CASE("sdc_check") {
    const auto tex = make_texture(TextureKind::composite, 512, 512, 2);
    const auto y = apply_speckle(tex, 1, 1);
    const auto self = sdc_check(y, y, 0.0);
    CHECK(self.pass);
    CHECK(self.relative_gap == 0.0);

    const auto z = apply_speckle(tex, 1, 2);
    CHECK(sdc_check(y, z, 0.01).pass);

    Raster doubled = y.raster();
    for (double& v : doubled.values) v *= 2.0;
    const auto r = sdc_check(y, IntensityImage(doubled), 0.01);
    CHECK_FALSE(r.pass);
    CHECK(r.relative_gap == doctest::Approx(0.5).epsilon(1e-12));

    // Symmetric; invariant to pixel order.
    CHECK(sdc_check(y, z, 0.01).relative_gap == sdc_check(z, y, 0.01).relative_gap);
    Raster rev = z.raster();
    std::reverse(rev.values.begin(), rev.values.end());
    CHECK(sdc_check(y, IntensityImage(rev), 0.01).relative_gap ==
          doctest::Approx(sdc_check(y, z, 0.01).relative_gap).epsilon(1e-12));

    const auto black = IntensityImage::constant(4, 4, 0.0);
    CHECK_THROWS_AS(sdc_check(black, black, 0.1), DegenerateInput);
}

TEST_CASE("PGM 8/16-bit and raw float round trips") {
    Raster r(5, 3);
    for (std::size_t i = 0; i < r.size(); ++i) r.values[i] = static_cast<double>(i * 17);
    const IntensityImage img(r);

    write_pgm(scratch("a8.pgm"), img, 255);
    unsigned maxval = 0;
    CHECK(read_pgm(scratch("a8.pgm"), &maxval) == img);
    CHECK(maxval == 255);

    Raster big = r;
    for (double& v : big.values) v *= 200.0;
    write_pgm(scratch("a16.pgm"), IntensityImage(big), 65535);
    const auto loaded = read_image(scratch("a16.pgm"));
    CHECK(loaded.format == FileFormat::pgm16);
    CHECK(loaded.image == IntensityImage(big));

    Raster frac(3, 2, std::vector<double>{0.25, 1.5, 3.75, 0.0, 2.0, 1e3});
    IntensityImage f(frac, 4);
    write_raw(scratch("f.raw"), f);
    const auto back = read_raw(scratch("f.raw"));
    CHECK(back == f);
    CHECK(back.looks() == 4);
    CHECK(fs::exists(scratch("f.json")));
}

TEST_CASE("image readers reject malformed files") {
    {
        std::ofstream os(scratch("bad.pgm"), std::ios::binary);
        os << "P2\n2 2\n255\n1 2 3 4\n";
    }
    CHECK_THROWS_AS(read_pgm(scratch("bad.pgm")), IoError);
    {
        std::ofstream os(scratch("short.pgm"), std::ios::binary);
        os << "P5\n4 4\n255\n" << "abc";
    }
    CHECK_THROWS_AS(read_pgm(scratch("short.pgm")), IoError);
    CHECK_THROWS_AS(read_raw(scratch("missing.raw")), IoError);
}

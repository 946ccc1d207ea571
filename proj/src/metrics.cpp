#include "sdssar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdssar/errors.hpp"

namespace sdssar {

namespace {

void require_same_shape(const IntensityImage& a, const IntensityImage& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw InvalidArgument(std::string(what) + ": image shapes differ");
    }
}

double dynamic_range(const IntensityImage& clean, std::optional<double> peak) {
    if (peak) {
        if (!(*peak > 0.0)) throw InvalidArgument("peak must be positive");
        return *peak;
    }
    const auto px = clean.pixels();
    const auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    const double range = *hi - *lo;
    const double r = range > 0.0 ? range : *hi;
    if (!(r > 0.0)) throw DegenerateInput("reference image has zero dynamic range");
    return r;
}

}  // namespace

void Region::validate(const IntensityImage& image) const {
    if (area() < 2) throw InvalidArgument("region area must be at least 2");
    if (row + height > image.height() || col + width > image.width()) {
        throw InvalidArgument("region out of bounds");
    }
}

Region Region::whole(const IntensityImage& image) {
    return {0, 0, image.height(), image.width()};
}

std::vector<double> region_pixels(const IntensityImage& image, const Region& region) {
    region.validate(image);
    std::vector<double> out;
    out.reserve(region.area());
    for (std::size_t r = region.row; r < region.row + region.height; ++r)
        for (std::size_t c = region.col; c < region.col + region.width; ++c) out.push_back(image.at(r, c));
    return out;
}

double enl(const IntensityImage& image, const Region& region) {
    const auto px = region_pixels(image, region);
    const double m = mean(px);
    const double v = variance(px);
    if (!(v > 0.0)) throw DegenerateInput("ENL: region has zero variance");
    return m * m / v;
}

double tcr(const IntensityImage& despeckled, const IntensityImage& speckled, const Region& region) {
    require_same_shape(despeckled, speckled, "TCR");
    auto contrast = [&](const IntensityImage& img) {
        const auto px = region_pixels(img, region);
        const double m = mean(px);
        const double mx = *std::max_element(px.begin(), px.end());
        if (!(m > 0.0) || !(mx > 0.0)) throw DegenerateInput("TCR: patch has zero mean or maximum");
        return 20.0 * std::log10(mx / m);
    };
    return std::abs(contrast(despeckled) - contrast(speckled));
}

double mor(const IntensityImage& speckled, const IntensityImage& despeckled, const Region& region) {
    require_same_shape(speckled, despeckled, "MoR");
    const auto x = region_pixels(speckled, region);
    const auto d = region_pixels(despeckled, region);
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) {
        throw DegenerateInput("MoR: despeckled image is all zero");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] / std::max(d[i], kMetricEpsilon);
    return s / static_cast<double>(x.size());
}

double mor(const IntensityImage& speckled, const IntensityImage& despeckled) {
    return mor(speckled, despeckled, Region::whole(speckled));
}

double epd_roa(const IntensityImage& despeckled, const IntensityImage& original, Direction direction) {
    require_same_shape(despeckled, original, "EPD-ROA");
    const std::size_t h = original.height();
    const std::size_t w = original.width();
    const std::size_t dr = direction == Direction::vertical ? 1 : 0;
    const std::size_t dc = direction == Direction::horizontal ? 1 : 0;
    if (h < 1 + dr || w < 1 + dc) throw InvalidArgument("EPD-ROA: image too small for direction");
    const auto px = original.pixels();
    if (std::all_of(px.begin(), px.end(), [&](double v) { return v == px.front(); })) {
        throw DegenerateInput("EPD-ROA: original image is constant");
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t r = 0; r + dr < h; ++r) {
        for (std::size_t c = 0; c + dc < w; ++c) {
            num += std::abs(despeckled.at(r, c) / std::max(despeckled.at(r + dr, c + dc), kMetricEpsilon));
            den += std::abs(original.at(r, c) / std::max(original.at(r + dr, c + dc), kMetricEpsilon));
        }
    }
    return num / den;
}

double psnr(const IntensityImage& test, const IntensityImage& clean, std::optional<double> peak) {
    require_same_shape(test, clean, "PSNR");
    double se = 0.0;
    const auto a = test.pixels();
    const auto b = clean.pixels();
    for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
    if (se == 0.0) return std::numeric_limits<double>::infinity();
    const double p = dynamic_range(clean, peak);
    return 10.0 * std::log10(p * p / (se / static_cast<double>(a.size())));
}

double ssim(const IntensityImage& a, const IntensityImage& b, std::optional<double> peak) {
    require_same_shape(a, b, "SSIM");
    // Range from the second argument alone would break symmetry, so use the
    // wider of the two when no peak is given.
    double p;
    if (peak) {
        p = dynamic_range(b, peak);
    } else {
        double ra = 0.0, rb = 0.0;
        try { ra = dynamic_range(a, std::nullopt); } catch (const DegenerateInput&) {}
        try { rb = dynamic_range(b, std::nullopt); } catch (const DegenerateInput&) {}
        p = std::max(ra, rb);
        if (!(p > 0.0)) p = 1.0;
    }
    const double c1 = (0.01 * p) * (0.01 * p);
    const double c2 = (0.03 * p) * (0.03 * p);
    const std::size_t wh = std::min<std::size_t>(8, a.height());
    const std::size_t ww = std::min<std::size_t>(8, a.width());
    const double n = static_cast<double>(wh * ww);
    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t r = 0; r + wh <= a.height(); ++r) {
        for (std::size_t c = 0; c + ww <= a.width(); ++c) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t y = r; y < r + wh; ++y) {
                for (std::size_t x = c; x < c + ww; ++x) {
                    const double u = a.at(y, x);
                    const double v = b.at(y, x);
                    sa += u;
                    sb += v;
                    saa += u * u;
                    sbb += v * v;
                    sab += u * v;
                }
            }
            const double ma = sa / n, mb = sb / n;
            const double va = std::max(0.0, saa / n - ma * ma);
            const double vb = std::max(0.0, sbb / n - mb * mb);
            const double cov = sab / n - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

MetricsReport evaluate(const EvaluationInputs& in) {
    if (!in.original || !in.despeckled) throw InvalidArgument("evaluate: original and despeckled required");
    const IntensityImage& x = *in.original;
    const IntensityImage& d = *in.despeckled;
    require_same_shape(x, d, "evaluate");
    MetricsReport rep;
    auto guarded = [&](const char* name, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            rep.errors.emplace_back(name, e.what());
        }
    };

    if (!in.homogeneous.empty()) {
        guarded("enl", [&] {
            double s = 0.0, so = 0.0;
            for (const auto& reg : in.homogeneous) {
                rep.enl_per_region.push_back(enl(d, reg));
                s += rep.enl_per_region.back();
            }
            rep.enl = s / static_cast<double>(in.homogeneous.size());
            for (const auto& reg : in.homogeneous) so += enl(x, reg);
            rep.enl_original = so / static_cast<double>(in.homogeneous.size());
        });
    }
    guarded("tcr", [&] { rep.tcr = tcr(d, x, in.target.value_or(Region::whole(x))); });
    guarded("mor", [&] { rep.mor = mor(x, d); });
    guarded("epd_roa_h", [&] { rep.epd_roa_h = epd_roa(d, x, Direction::horizontal); });
    guarded("epd_roa_v", [&] { rep.epd_roa_v = epd_roa(d, x, Direction::vertical); });
    if (rep.epd_roa_h && rep.epd_roa_v) rep.epd_roa = 0.5 * (*rep.epd_roa_h + *rep.epd_roa_v);
    if (in.clean) {
        guarded("psnr", [&] { rep.psnr = psnr(d, *in.clean, in.peak); });
        guarded("ssim", [&] { rep.ssim = ssim(d, *in.clean, in.peak); });
    }
    return rep;
}

}  // namespace sdssar

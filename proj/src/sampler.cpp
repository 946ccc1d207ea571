#include "sdssar/sampler.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numeric>
#include <string>

#include "sdssar/errors.hpp"
#include "sdssar/rng.hpp"

namespace sdssar {

namespace {

void check_sampling_args(const IntensityImage& image, std::size_t k) {
    if (k < 2) throw InvalidArgument("patch side k must be >= 2");
    if (image.width() < k || image.height() < k) {
        throw InvalidArgument("image " + std::to_string(image.width()) + "x" +
                              std::to_string(image.height()) + " is smaller than one " +
                              std::to_string(k) + "x" + std::to_string(k) + " patch");
    }
}

/// slot_of(patch, j) gives the intra-patch raster position feeding sub-image j.
template <class SlotFn>
SubImageStack build_stack(const IntensityImage& image, std::size_t k, SlotFn&& slot_of) {
    check_sampling_args(image, k);
    SubImageStack st;
    st.k = k;
    const std::size_t pw = image.width() / k;
    const std::size_t ph = image.height() / k;
    st.source_width = pw * k;
    st.source_height = ph * k;
    const std::size_t kk = k * k;
    const std::size_t sub = pw * ph;

    std::vector<Raster> subs(kk, Raster(pw, ph));
    st.positions.rows.resize(kk * sub);
    st.positions.cols.resize(kk * sub);
    std::vector<std::size_t> slots(kk);
    for (std::size_t pr = 0; pr < ph; ++pr) {
        for (std::size_t pc = 0; pc < pw; ++pc) {
            const std::size_t p = pr * pw + pc;
            slot_of(p, slots);
            for (std::size_t j = 0; j < kk; ++j) {
                const std::size_t r = pr * k + slots[j] / k;
                const std::size_t c = pc * k + slots[j] % k;
                subs[j].values[p] = image.at(r, c);
                st.positions.rows[j * sub + p] = static_cast<std::uint32_t>(r);
                st.positions.cols[j * sub + p] = static_cast<std::uint32_t>(c);
            }
        }
    }
    st.subimages.reserve(kk);
    for (auto& s : subs) st.subimages.emplace_back(std::move(s), image.looks());
    return st;
}

}  // namespace

void SubImageStack::validate() const {
    if (k < 2) throw CorruptedStack("stack k < 2");
    if (source_width % k != 0 || source_height % k != 0 || source_width == 0 ||
        source_height == 0) {
        throw CorruptedStack("stack source shape is not a positive multiple of k");
    }
    if (subimages.size() != k * k) throw CorruptedStack("stack does not hold k*k sub-images");
    for (const auto& s : subimages) {
        if (s.width() != sub_width() || s.height() != sub_height()) {
            throw CorruptedStack("sub-image shape mismatch");
        }
    }
    const std::size_t n = source_width * source_height;
    if (positions.rows.size() != n || positions.cols.size() != n) {
        throw CorruptedStack("position map size does not match the cropped source");
    }
    std::vector<unsigned char> seen(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = positions.rows[i];
        const auto c = positions.cols[i];
        if (r >= source_height || c >= source_width) throw CorruptedStack("position out of range");
        auto& s = seen[static_cast<std::size_t>(r) * source_width + c];
        if (s) throw CorruptedStack("position map is not a bijection");
        s = 1;
    }
}

IntensityImage sampler_crop(const IntensityImage& image, std::size_t k) {
    check_sampling_args(image, k);
    return image.crop(0, 0, (image.height() / k) * k, (image.width() / k) * k);
}

SubImageStack ra_sample(const IntensityImage& image, std::size_t k, std::uint64_t seed) {
    auto rng = make_rng(seed);
    return build_stack(image, k, [&](std::size_t, std::vector<std::size_t>& slots) {
        std::iota(slots.begin(), slots.end(), std::size_t{0});
        std::shuffle(slots.begin(), slots.end(), rng);
    });
}

SubImageStack ordered_sample(const IntensityImage& image, std::size_t k) {
    return build_stack(image, k, [](std::size_t, std::vector<std::size_t>& slots) {
        std::iota(slots.begin(), slots.end(), std::size_t{0});
    });
}

Raster global_upsample(const SubImageStack& layout, const std::vector<Raster>& subimages) {
    if (subimages.size() != layout.k * layout.k) {
        throw CorruptedStack("expected k*k rasters to up-sample");
    }
    const std::size_t sub = layout.sub_size();
    const std::size_t n = layout.source_width * layout.source_height;
    if (layout.positions.size() != n) throw CorruptedStack("position map size mismatch");
    Raster out(layout.source_width, layout.source_height);
    std::vector<unsigned char> written(n, 0);
    for (std::size_t j = 0; j < subimages.size(); ++j) {
        if (subimages[j].width != layout.sub_width() || subimages[j].height != layout.sub_height()) {
            throw CorruptedStack("sub-image raster shape mismatch");
        }
        for (std::size_t p = 0; p < sub; ++p) {
            const std::size_t r = layout.positions.rows[j * sub + p];
            const std::size_t c = layout.positions.cols[j * sub + p];
            if (r >= layout.source_height || c >= layout.source_width) {
                throw CorruptedStack("position out of range");
            }
            const std::size_t idx = r * layout.source_width + c;
            if (written[idx]) throw CorruptedStack("position map is not a bijection");
            written[idx] = 1;
            out.values[idx] = subimages[j].values[p];
        }
    }
    return out;
}

IntensityImage global_upsample(const SubImageStack& stack) {
    std::vector<Raster> subs;
    subs.reserve(stack.subimages.size());
    for (const auto& s : stack.subimages) subs.push_back(s.raster());
    std::optional<int> looks = stack.subimages.empty() ? std::nullopt : stack.subimages[0].looks();
    return IntensityImage(global_upsample(stack, subs), looks);
}

std::vector<Raster> gather_to_subimages(const SubImageStack& layout, const Raster& full) {
    if (full.width != layout.source_width || full.height != layout.source_height) {
        throw InvalidArgument("gather: raster does not match the stack's source shape");
    }
    const std::size_t sub = layout.sub_size();
    std::vector<Raster> out(layout.k * layout.k, Raster(layout.sub_width(), layout.sub_height()));
    for (std::size_t j = 0; j < out.size(); ++j) {
        for (std::size_t p = 0; p < sub; ++p) {
            out[j].values[p] =
                full.at(layout.positions.rows[j * sub + p], layout.positions.cols[j * sub + p]);
        }
    }
    return out;
}

void DecorrelatorSpec::validate() const {
    if (!(cutoff > 0.0) || !(gain > 0.0) || !(offset > 0.0) || order < 1 ||
        !std::isfinite(cutoff) || !std::isfinite(gain) || !std::isfinite(offset)) {
        throw InvalidArgument("decorrelator needs cutoff > 0, A > 0, B > 0, order >= 1");
    }
}

double DecorrelatorSpec::response(double f) const {
    if (f > cutoff) return 0.0;
    return gain / (offset + std::pow(f / cutoff, 2.0 * order));
}

double radial_frequency(std::size_t u, std::size_t v, std::size_t width, std::size_t height) {
    const double grid = static_cast<double>(std::max(width, height));
    auto signed_bin = [](std::size_t b, std::size_t n) {
        return b <= n / 2 ? static_cast<double>(b) : static_cast<double>(b) - static_cast<double>(n);
    };
    const double fu = signed_bin(u, width) * grid / static_cast<double>(width);
    const double fv = signed_bin(v, height) * grid / static_cast<double>(height);
    return std::hypot(fu, fv);
}

namespace {

struct FftwDeleter {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};
struct PlanDeleter {
    void operator()(fftw_plan_s* p) const { fftw_destroy_plan(p); }
};

}  // namespace

Raster decorrelate_unclamped(const Raster& image, const DecorrelatorSpec& spec) {
    spec.validate();
    if (image.empty()) throw InvalidArgument("decorrelate: empty image");
    const std::size_t w = image.width;
    const std::size_t h = image.height;
    const std::size_t n = w * h;
    std::unique_ptr<fftw_complex, FftwDeleter> buf(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
    // FFTW_ESTIMATE plans are deterministic and do not touch the buffer.
    std::unique_ptr<fftw_plan_s, PlanDeleter> fwd(fftw_plan_dft_2d(
        static_cast<int>(h), static_cast<int>(w), buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    std::unique_ptr<fftw_plan_s, PlanDeleter> inv(fftw_plan_dft_2d(
        static_cast<int>(h), static_cast<int>(w), buf.get(), buf.get(), FFTW_BACKWARD, FFTW_ESTIMATE));
    for (std::size_t i = 0; i < n; ++i) {
        buf.get()[i][0] = image.values[i];
        buf.get()[i][1] = 0.0;
    }
    fftw_execute(fwd.get());
    for (std::size_t v = 0; v < h; ++v) {
        for (std::size_t u = 0; u < w; ++u) {
            const double g = spec.response(radial_frequency(u, v, w, h));
            auto& c = buf.get()[v * w + u];
            c[0] *= g;
            c[1] *= g;
        }
    }
    fftw_execute(inv.get());
    Raster out(w, h);
    const double norm = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = buf.get()[i][0] * norm;
    return out;
}

IntensityImage decorrelate(const IntensityImage& image, const DecorrelatorSpec& spec) {
    return IntensityImage::clamped(decorrelate_unclamped(image.raster(), spec), image.looks());
}

}  // namespace sdssar

#include "sdssar/features.hpp"

#include <cmath>
#include <random>

#include "sdssar/errors.hpp"
#include "sdssar/rng.hpp"

namespace sdssar {

FeatureExtractor::FeatureExtractor(std::vector<FeatureStage> stages, std::vector<double> weights)
    : stages_(std::move(stages)), weights_(std::move(weights)) {
    if (stages_.empty()) throw InvalidArgument("feature extractor needs at least one stage");
    std::size_t in = 1;
    std::size_t o = 0;
    for (const auto& s : stages_) {
        if (s.channels == 0 || s.kernel == 0 || s.kernel % 2 == 0) {
            throw InvalidArgument("feature stages need positive channels and an odd kernel");
        }
        geometry_.push_back({in, s.channels, s.kernel, 1});
        offsets_.push_back(o);
        o += geometry_.back().param_count();
        in = s.channels;
    }
    if (weights_.size() != o) throw InvalidArgument("feature extractor weight count mismatch");
}

FeatureExtractor FeatureExtractor::seeded(std::uint64_t seed,
                                          const std::vector<std::size_t>& channels) {
    if (channels.empty() || channels.back() < 8) {
        throw InvalidArgument("feature extractor must output at least 8 channels");
    }
    std::vector<FeatureStage> stages;
    for (auto c : channels) stages.push_back({c, 3, true, true});
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w;
    std::size_t in = 1;
    for (const auto& s : stages) {
        const ConvGeometry g{in, s.channels, s.kernel, 1};
        const double sd = std::sqrt(2.0 / static_cast<double>(in * s.kernel * s.kernel));
        for (std::size_t i = 0; i < g.weight_count(); ++i) w.push_back(sd * normal(rng));
        for (std::size_t i = 0; i < g.out_channels; ++i) w.push_back(0.0);
        in = s.channels;
    }
    return FeatureExtractor(std::move(stages), std::move(w));
}

Tensor FeatureExtractor::extract(const Raster& image, Trace* trace) const {
    if (trace) {
        trace->columns.assign(stages_.size(), Matrix());
        trace->pre_pool.clear();
    }
    Tensor cur = Tensor::from_raster(image);
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        std::span<const double> block(weights_.data() + offsets_[s], geometry_[s].param_count());
        Tensor out = conv_forward(cur, geometry_[s], block, trace ? &trace->columns[s] : nullptr);
        if (stages_[s].relu) out.data = out.data.cwiseMax(0.0);
        if (trace) trace->pre_pool.push_back(out);
        cur = stages_[s].pool ? avg_pool2(out) : std::move(out);
    }
    return cur;
}

Raster FeatureExtractor::backward(const Trace& trace, const Tensor& grad_features,
                                  std::size_t height, std::size_t width) const {
    if (trace.pre_pool.size() != stages_.size()) throw InvalidArgument("feature trace mismatch");
    Tensor g = grad_features;
    for (std::size_t s = stages_.size(); s-- > 0;) {
        const Tensor& pre = trace.pre_pool[s];
        if (stages_[s].pool) g = avg_pool2_backward(g, pre.height, pre.width);
        if (stages_[s].relu) {
            g.data = g.data.cwiseProduct((pre.data.array() > 0.0).cast<double>().matrix());
        }
        std::span<const double> block(weights_.data() + offsets_[s], geometry_[s].param_count());
        g = conv_backward(trace.columns[s], g, geometry_[s], block, {}, true);
    }
    if (g.height != height || g.width != width) throw InvalidArgument("feature gradient shape mismatch");
    return g.to_raster();
}

}  // namespace sdssar

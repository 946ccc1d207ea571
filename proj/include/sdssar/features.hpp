#pragma once

#include <cstdint>
#include <vector>

#include "sdssar/tensor.hpp"

namespace sdssar {

struct FeatureStage {
    std::size_t channels = 16;
    std::size_t kernel = 3;
    bool relu = true;
    bool pool = true;
};

/// Fixed (never trained) convolutional feature stack standing in for a
/// pretrained VGG: each stage is conv (reflect padded) -> optional ReLU ->
/// optional 2x2 average pooling. Immutable after construction.
class FeatureExtractor {
public:
    struct Trace {
        std::vector<Matrix> columns;
        std::vector<Tensor> pre_pool;  ///< stage output before pooling
    };

    FeatureExtractor(std::vector<FeatureStage> stages, std::vector<double> weights);

    /// Randomly initialized 3-stage stack (16/32/64 channels by default).
    static FeatureExtractor seeded(std::uint64_t seed,
                                   const std::vector<std::size_t>& channels = {16, 32, 64});

    Tensor extract(const Raster& image, Trace* trace = nullptr) const;
    /// Gradient w.r.t. the input image given dLoss/dFeatures.
    Raster backward(const Trace& trace, const Tensor& grad_features, std::size_t height,
                    std::size_t width) const;

    std::size_t output_channels() const noexcept { return stages_.back().channels; }
    const std::vector<FeatureStage>& stages() const noexcept { return stages_; }
    std::size_t param_count() const noexcept { return weights_.size(); }

private:
    std::vector<ConvGeometry> geometry_;
    std::vector<FeatureStage> stages_;
    std::vector<double> weights_;
    std::vector<std::size_t> offsets_;
};

}  // namespace sdssar

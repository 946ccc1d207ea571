#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdssar/image.hpp"
#include "sdssar/tensor.hpp"

namespace sdssar {

/// Intensity transform applied before the network and inverted after it.
/// linear: x / scale; log1p: log(1 + x / scale).
enum class IntensityDomain { linear, log1p };

std::string to_string(IntensityDomain d);
IntensityDomain domain_from_string(const std::string& s);

struct LayerSpec {
    std::size_t out_channels = 32;
    std::size_t kernel = 3;
    std::size_t dilation = 1;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Plain dilated-convolution stack: ReLU after every layer except the last;
/// with `residual`, the output is input - stack(input).
struct NetworkSpec {
    std::vector<LayerSpec> layers;
    bool residual = true;
    IntensityDomain domain = IntensityDomain::linear;
    double scale = 1.0;

    /// 7 layers, 32 channels, 3x3 kernels, dilations 1,2,3,4,3,2,1.
    static NetworkSpec reference();

    void validate() const;
    std::vector<ConvGeometry> geometry() const;
    std::size_t param_count() const;

    nlohmann::json to_json() const;
    static NetworkSpec from_json(const nlohmann::json& j);

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Flat parameter vector: per layer, weights [out][in][ky][kx] then biases.
struct DespecklerParams {
    NetworkSpec spec;
    std::vector<double> values;

    /// He fan-in normal init; final layer all zeros so the residual net starts
    /// as the identity.
    static DespecklerParams initialize(const NetworkSpec& spec, std::uint64_t seed);
    /// Every parameter drawn from N(0, scale^2 * 2/fan_in), final layer included.
    static DespecklerParams random(const NetworkSpec& spec, std::uint64_t seed,
                                   double scale = 1.0);

    void validate() const;
    std::vector<std::size_t> layer_offsets() const;
};

/// Per-layer buffers kept by a training forward pass.
struct ForwardCache {
    std::vector<Matrix> columns;  ///< im2col of each layer input
    std::vector<Tensor> outputs;           ///< post-activation output of each layer
    std::size_t height = 0;
    std::size_t width = 0;
};

Raster to_domain(const Raster& intensity, const NetworkSpec& spec);
Raster from_domain(const Raster& values, const NetworkSpec& spec);

/// Network in its working domain, no clamping. Fills `cache` when given.
Raster network_forward(const DespecklerParams& params, const Raster& input,
                       ForwardCache* cache = nullptr);

/// Accumulates dLoss/dParams into `grad` given dLoss/dOutput.
void network_backward(const DespecklerParams& params, const ForwardCache& cache,
                      const Raster& grad_output, std::span<double> grad);

/// Intensity in, intensity out; negative outputs clamped to 0.
IntensityImage forward(const DespecklerParams& params, const IntensityImage& image);

/// Full-resolution inference. In the log1p domain the output is rescaled to the
/// input's global mean (the log transform biases the expectation downward).
IntensityImage despeckle(const DespecklerParams& params, const IntensityImage& image);

}  // namespace sdssar

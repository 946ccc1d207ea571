#include "sdssar/model.hpp"

#include <cmath>
#include <random>

#include "sdssar/errors.hpp"
#include "sdssar/rng.hpp"

namespace sdssar {

std::string to_string(IntensityDomain d) { return d == IntensityDomain::log1p ? "log1p" : "linear"; }

IntensityDomain domain_from_string(const std::string& s) {
    if (s == "linear") return IntensityDomain::linear;
    if (s == "log1p") return IntensityDomain::log1p;
    throw InvalidArgument("unknown intensity domain '" + s + "'");
}

NetworkSpec NetworkSpec::reference() {
    NetworkSpec s;
    for (std::size_t d : {1, 2, 3, 4, 3, 2, 1}) s.layers.push_back({32, 3, d});
    s.layers.back().out_channels = 1;
    return s;
}

void NetworkSpec::validate() const {
    if (layers.empty()) throw InvalidArgument("network needs at least one layer");
    if (layers.back().out_channels != 1) throw InvalidArgument("last layer must output one channel");
    for (const auto& l : layers) {
        if (l.out_channels == 0 || l.dilation == 0 || l.kernel == 0 || l.kernel % 2 == 0) {
            throw InvalidArgument("layers need positive channels/dilation and an odd kernel");
        }
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("network scale must be > 0");
}

std::vector<ConvGeometry> NetworkSpec::geometry() const {
    std::vector<ConvGeometry> g;
    std::size_t in = 1;
    for (const auto& l : layers) {
        g.push_back({in, l.out_channels, l.kernel, l.dilation});
        in = l.out_channels;
    }
    return g;
}

std::size_t NetworkSpec::param_count() const {
    std::size_t n = 0;
    for (const auto& g : geometry()) n += g.param_count();
    return n;
}

nlohmann::json NetworkSpec::to_json() const {
    nlohmann::json j;
    j["layers"] = nlohmann::json::array();
    for (const auto& l : layers) {
        j["layers"].push_back(
            {{"out_channels", l.out_channels}, {"kernel", l.kernel}, {"dilation", l.dilation}});
    }
    j["residual"] = residual;
    j["domain"] = to_string(domain);
    j["scale"] = scale;
    return j;
}

NetworkSpec NetworkSpec::from_json(const nlohmann::json& j) {
    NetworkSpec s;
    try {
        for (const auto& l : j.at("layers")) {
            s.layers.push_back({l.at("out_channels").get<std::size_t>(),
                                l.value("kernel", std::size_t{3}),
                                l.value("dilation", std::size_t{1})});
        }
        s.residual = j.value("residual", true);
        s.domain = domain_from_string(j.value("domain", std::string("linear")));
        s.scale = j.value("scale", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("bad network spec: ") + e.what());
    }
    s.validate();
    return s;
}

std::vector<std::size_t> DespecklerParams::layer_offsets() const {
    std::vector<std::size_t> off;
    std::size_t o = 0;
    for (const auto& g : spec.geometry()) {
        off.push_back(o);
        o += g.param_count();
    }
    off.push_back(o);
    return off;
}

void DespecklerParams::validate() const {
    spec.validate();
    if (values.size() != spec.param_count()) {
        throw InvalidArgument("parameter count does not match the network spec");
    }
    for (double v : values)
        if (!std::isfinite(v)) throw NumericOverflow("non-finite network parameter");
}

namespace {

DespecklerParams init_params(const NetworkSpec& spec, std::uint64_t seed, double scale,
                             bool zero_last, double bias_std) {
    spec.validate();
    DespecklerParams p{spec, std::vector<double>(spec.param_count(), 0.0)};
    auto rng = make_rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto geo = spec.geometry();
    std::size_t o = 0;
    for (std::size_t l = 0; l < geo.size(); ++l) {
        const auto& g = geo[l];
        const bool zero = zero_last && l + 1 == geo.size();
        const double sd = scale * std::sqrt(2.0 / static_cast<double>(g.in_channels * g.kernel * g.kernel));
        for (std::size_t i = 0; i < g.weight_count(); ++i) p.values[o + i] = zero ? 0.0 : sd * normal(rng);
        for (std::size_t i = 0; i < g.out_channels; ++i) {
            p.values[o + g.weight_count() + i] = zero ? 0.0 : bias_std * normal(rng);
        }
        o += g.param_count();
    }
    return p;
}

}  // namespace

DespecklerParams DespecklerParams::initialize(const NetworkSpec& spec, std::uint64_t seed) {
    return init_params(spec, seed, 1.0, true, 0.0);
}

DespecklerParams DespecklerParams::random(const NetworkSpec& spec, std::uint64_t seed,
                                          double scale) {
    return init_params(spec, seed, scale, false, 0.1 * scale);
}

Raster to_domain(const Raster& intensity, const NetworkSpec& spec) {
    Raster out = intensity;
    for (double& v : out.values) {
        v /= spec.scale;
        if (spec.domain == IntensityDomain::log1p) v = std::log1p(v);
    }
    return out;
}

Raster from_domain(const Raster& values, const NetworkSpec& spec) {
    Raster out = values;
    for (double& v : out.values) {
        if (spec.domain == IntensityDomain::log1p) v = std::expm1(v);
        v *= spec.scale;
    }
    return out;
}

Raster network_forward(const DespecklerParams& params, const Raster& input, ForwardCache* cache) {
    const auto geo = params.spec.geometry();
    const auto off = params.layer_offsets();
    if (params.values.size() != off.back()) throw InvalidArgument("parameter count mismatch");
    if (cache) {
        cache->columns.assign(geo.size(), Matrix());
        cache->outputs.clear();
        cache->height = input.height;
        cache->width = input.width;
    }
    Tensor cur = Tensor::from_raster(input);
    for (std::size_t l = 0; l < geo.size(); ++l) {
        std::span<const double> block(params.values.data() + off[l], geo[l].param_count());
        Tensor out = conv_forward(cur, geo[l], block, cache ? &cache->columns[l] : nullptr);
        if (l + 1 < geo.size()) out.data = out.data.cwiseMax(0.0);
        if (cache) cache->outputs.push_back(out);
        cur = std::move(out);
    }
    Raster result = cur.to_raster();
    if (params.spec.residual) {
        for (std::size_t i = 0; i < result.size(); ++i) result.values[i] = input.values[i] - result.values[i];
    }
    for (double v : result.values) {
        if (!std::isfinite(v)) throw NumericOverflow("non-finite activation in network output");
    }
    return result;
}

void network_backward(const DespecklerParams& params, const ForwardCache& cache,
                      const Raster& grad_output, std::span<double> grad) {
    const auto geo = params.spec.geometry();
    const auto off = params.layer_offsets();
    if (grad.size() != params.values.size()) throw InvalidArgument("gradient buffer size mismatch");
    if (cache.outputs.size() != geo.size()) throw InvalidArgument("forward cache does not match the network");
    Tensor g = Tensor::from_raster(grad_output);
    if (params.spec.residual) g.data = -g.data;
    for (std::size_t l = geo.size(); l-- > 0;) {
        if (l + 1 < geo.size()) {
            g.data = g.data.cwiseProduct(
                (cache.outputs[l].data.array() > 0.0).cast<double>().matrix());
        }
        std::span<const double> block(params.values.data() + off[l], geo[l].param_count());
        std::span<double> gblock(grad.data() + off[l], geo[l].param_count());
        g = conv_backward(cache.columns[l], g, geo[l], block, gblock, l > 0);
    }
}

IntensityImage forward(const DespecklerParams& params, const IntensityImage& image) {
    const Raster out = network_forward(params, to_domain(image.raster(), params.spec));
    return IntensityImage::clamped(from_domain(out, params.spec));
}

IntensityImage despeckle(const DespecklerParams& params, const IntensityImage& image) {
    IntensityImage out = forward(params, image);
    if (params.spec.domain != IntensityDomain::log1p) return out;
    const double target = mean(image.pixels());
    const double got = mean(out.pixels());
    if (got <= 0.0 || target <= 0.0) return out;
    Raster r = out.raster();
    for (double& v : r.values) v *= target / got;
    return IntensityImage(std::move(r));
}

}  // namespace sdssar

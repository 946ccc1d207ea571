#include "sdssar/loss.hpp"

#include <cmath>
#include <string>

#include "sdssar/errors.hpp"

namespace sdssar {

void LossWeights::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
        throw InvalidArgument("loss weights must be finite and >= 0");
    }
}

namespace {

void check_cycle(std::span<const Raster> outputs, std::span<const Raster> targets) {
    if (outputs.size() != targets.size() || outputs.size() < 2) {
        throw InvalidArgument("cycle loss needs equal-length sequences of at least 2 rasters");
    }
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (!outputs[i].same_shape(targets[i]) || !outputs[i].same_shape(outputs[0])) {
            throw InvalidArgument("cycle loss: raster shape mismatch at index " + std::to_string(i));
        }
    }
}

double squared_distance(const Raster& a, const Raster& b) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p) {
        const double d = a.values[p] - b.values[p];
        s += d * d;
    }
    return s;
}

}  // namespace

std::vector<Raster> cycle_targets(std::span<const Raster> inputs) {
    std::vector<Raster> t;
    t.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) t.push_back(inputs[(i + 1) % inputs.size()]);
    return t;
}

TermResult cyc_desp_plain(std::span<const Raster> outputs, std::span<const Raster> targets) {
    check_cycle(outputs, targets);
    TermResult r;
    const double inv = 1.0 / static_cast<double>(outputs[0].size());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        Raster g(outputs[i].width, outputs[i].height);
        double s = 0.0;
        for (std::size_t p = 0; p < g.size(); ++p) {
            const double d = outputs[i].values[p] - targets[i].values[p];
            s += d * d;
            g.values[p] = 2.0 * d * inv;
        }
        r.value += s * inv;
        r.grad.push_back(std::move(g));
    }
    return r;
}

std::vector<double> log_denominators(std::span<const Raster> targets) {
    const std::size_t K = targets.size();
    std::vector<double> den(K);
    for (std::size_t i = 0; i < K; ++i) {
        // pair (y_i, y_{i+1}) = (targets[i-1], targets[i])
        const Raster& yi = targets[(i + K - 1) % K];
        den[i] = std::log(kLogLossEpsilon + squared_distance(yi, targets[i]));
        if (den[i] < kLogDenominatorFloor) {
            throw DegenerateInput("log-form despeckling term: degenerate pair " + std::to_string(i) +
                                  " (log ||y_i - y_{i+1}||^2 = " + std::to_string(den[i]) + ")");
        }
    }
    return den;
}

TermResult cyc_desp_log(std::span<const Raster> outputs, std::span<const Raster> targets) {
    check_cycle(outputs, targets);
    const auto den = log_denominators(targets);
    TermResult r;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const double num = kLogLossEpsilon + squared_distance(outputs[i], targets[i]);
        r.value += std::log(num) / den[i];
        Raster g(outputs[i].width, outputs[i].height);
        const double scale = 2.0 / (num * den[i]);
        for (std::size_t p = 0; p < g.size(); ++p) {
            g.values[p] = scale * (outputs[i].values[p] - targets[i].values[p]);
        }
        r.grad.push_back(std::move(g));
    }
    return r;
}

TermResult reg_loss(const Raster& full_output, const Raster& mapped_output) {
    if (!full_output.same_shape(mapped_output) || full_output.empty()) {
        throw InvalidArgument("regularization term: shape mismatch");
    }
    TermResult r;
    const double inv = 1.0 / static_cast<double>(full_output.size());
    Raster g_full(full_output.width, full_output.height);
    Raster g_mapped(full_output.width, full_output.height);
    for (std::size_t p = 0; p < full_output.size(); ++p) {
        const double d = full_output.values[p] - mapped_output.values[p];
        r.value += d * d;
        g_full.values[p] = 2.0 * d * inv;
        g_mapped.values[p] = -2.0 * d * inv;
    }
    r.value *= inv;
    r.grad.push_back(std::move(g_full));
    r.grad.push_back(std::move(g_mapped));
    return r;
}

TermResult perceptual_loss(const FeatureExtractor& phi, std::span<const Raster> outputs,
                           std::span<const Raster> inputs) {
    if (outputs.size() != inputs.size() || outputs.empty()) {
        throw InvalidArgument("perceptual term: need matching, nonempty pair lists");
    }
    TermResult r;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        if (!outputs[i].same_shape(inputs[i])) {
            throw InvalidArgument("perceptual term: shape mismatch at pair " + std::to_string(i));
        }
        FeatureExtractor::Trace trace;
        const Tensor fo = phi.extract(outputs[i], &trace);
        const Tensor fi = phi.extract(inputs[i]);
        const double chw = static_cast<double>(fo.data.size());
        const Matrix diff = fo.data - fi.data;
        r.value += diff.squaredNorm() / chw;
        Tensor g(fo.channels(), fo.height, fo.width);
        g.data = (2.0 / chw) * diff;
        r.grad.push_back(phi.backward(trace, g, outputs[i].height, outputs[i].width));
    }
    return r;
}

LossBreakdown total_loss(double cyc, double reg, double per, const LossWeights& weights) {
    weights.validate();
    return {cyc, reg, per, cyc + weights.alpha * reg + weights.beta * per};
}

LossBreakdown total_loss(const LossInputs& in, const FeatureExtractor& phi,
                         const LossWeights& weights, bool log_form) {
    const auto targets = cycle_targets(in.subimages);
    const double cyc = log_form ? cyc_desp_log(in.outputs, targets).value
                                : cyc_desp_plain(in.outputs, targets).value;
    const double reg = reg_loss(in.full_output, in.mapped_output).value;
    const std::size_t pairs = std::min<std::size_t>(2, in.outputs.size());
    const double per = perceptual_loss(phi, std::span(in.outputs).first(pairs),
                                       std::span(in.subimages).first(pairs))
                           .value;
    return total_loss(cyc, reg, per, weights);
}

}  // namespace sdssar

#pragma once

#include <span>
#include <vector>

#include "sdssar/features.hpp"
#include "sdssar/image.hpp"

namespace sdssar {

struct LossWeights {
    double alpha = 1.0;  ///< regularization
    double beta = 1.0;   ///< perceptual
    void validate() const;
};

struct LossBreakdown {
    double cyc = 0.0;
    double reg = 0.0;
    double per = 0.0;
    double total = 0.0;
};

/// Floor inside both logarithms of the log-form despeckling term.
inline constexpr double kLogLossEpsilon = 1e-8;
/// A log-form denominator below this is rejected as a degenerate pair.
inline constexpr double kLogDenominatorFloor = 1e-6;

/// A loss value with its gradient w.r.t. each differentiable input raster.
struct TermResult {
    double value = 0.0;
    std::vector<Raster> grad;
};

/// targets[i] = inputs[(i + 1) % K]: the cyclic pairing of sub-images.
std::vector<Raster> cycle_targets(std::span<const Raster> inputs);

/// sum_i mean((outputs[i] - targets[i])^2).
TermResult cyc_desp_plain(std::span<const Raster> outputs, std::span<const Raster> targets);

/// sum_i log(eps + ||outputs[i] - targets[i]||^2) / log(eps + ||y_i - y_{i+1}||^2)
/// with summed (not averaged) squared norms. y_i = targets[i-1] and
/// y_{i+1} = targets[i], so the denominators depend on the data only and carry
/// no gradient. Throws DegenerateInput naming the pair index when a
/// denominator is below kLogDenominatorFloor.
TermResult cyc_desp_log(std::span<const Raster> outputs, std::span<const Raster> targets);

/// Log-form denominators log(eps + ||y_i - y_{i+1}||^2), in cycle order.
std::vector<double> log_denominators(std::span<const Raster> targets);

/// mean((full - mapped)^2). grad[0] is w.r.t. full, grad[1] w.r.t. mapped;
/// the caller decides which branch is stop-gradient.
TermResult reg_loss(const Raster& full_output, const Raster& mapped_output);

/// sum over the given pairs of ||phi(outputs[i]) - phi(inputs[i])||^2 / (C*H*W).
/// grad[i] is w.r.t. outputs[i].
TermResult perceptual_loss(const FeatureExtractor& phi, std::span<const Raster> outputs,
                           std::span<const Raster> inputs);

LossBreakdown total_loss(double cyc, double reg, double per, const LossWeights& weights);

}  // namespace sdssar

namespace sdssar {

/// Everything the three terms look at for one sampled tile.
struct LossInputs {
    std::vector<Raster> subimages;  ///< y_1 .. y_K
    std::vector<Raster> outputs;    ///< f(y_1) .. f(y_K)
    Raster full_output;             ///< f(y)
    Raster mapped_output;           ///< h(f(stack))
};

/// Full objective; the despeckling term uses the log form when `log_form`.
LossBreakdown total_loss(const LossInputs& in, const FeatureExtractor& phi,
                         const LossWeights& weights, bool log_form);

}  // namespace sdssar

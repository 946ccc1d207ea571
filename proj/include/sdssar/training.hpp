#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sdssar/features.hpp"
#include "sdssar/loss.hpp"
#include "sdssar/model.hpp"
#include "sdssar/sampler.hpp"

namespace sdssar {

/// Which network evaluation of the regularization term is detached.
/// full_image: f(y) is a constant target (the default); mapped_stack: the
/// alternative reading where h(f(stack)) is detached instead.
enum class StopGradientBranch { full_image, mapped_stack };

struct LossOptions {
    LossWeights weights;
    bool log_form = false;
    StopGradientBranch stop_branch = StopGradientBranch::full_image;
};

/// One training tile, already in the network's working domain.
struct TrainingItem {
    IntensityImage source;  ///< cropped tile y
    SubImageStack stack;    ///< sub-images (y_1 possibly decorrelated) + positions
};

struct LossGradient {
    LossBreakdown loss;
    std::vector<double> gradient;
};

/// Batch-mean loss and its exact reverse-mode gradient. The detached branch
/// is evaluated with `detached_params` when given (finite-difference tests
/// freeze it that way), otherwise with `params`.
LossGradient loss_gradient(const DespecklerParams& params, std::span<const TrainingItem> batch,
                           const FeatureExtractor& phi, const LossOptions& options,
                           const DespecklerParams* detached_params = nullptr);

LossBreakdown evaluate_loss(const DespecklerParams& params, std::span<const TrainingItem> batch,
                            const FeatureExtractor& phi, const LossOptions& options,
                            const DespecklerParams* detached_params = nullptr);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               double learning_rate);

struct TrainConfig {
    double learning_rate = 3e-4;
    std::size_t decay_every = 20;
    double decay_factor = 0.5;
    std::size_t batch_size = 4;
    std::size_t epochs = 300;
    std::uint64_t seed = 0;
    LossWeights weights;
    std::size_t tile_size = 256;
    std::size_t tiles_per_epoch = 0;  ///< 0: one tile per dataset image
    std::size_t k = 2;
    bool log_form = false;
    bool decorrelate_training = true;
    DecorrelatorSpec decorrelator;
    StopGradientBranch stop_branch = StopGradientBranch::full_image;
    NetworkSpec network = NetworkSpec::reference();
    std::uint64_t feature_seed = 0x5eed;

    void validate() const;
    /// lr(e) = lr0 * decay_factor^floor(e / decay_every), epochs counted from 0.
    double learning_rate_at(std::size_t epoch) const;
};

struct StepRecord {
    std::size_t epoch = 0;
    std::size_t step = 0;
    LossBreakdown loss;
    double learning_rate = 0.0;
};

struct TrainState {
    DespecklerParams params;
    AdamState adam;
    std::size_t next_epoch = 0;
    std::vector<StepRecord> history;
};

struct TrainHooks {
    std::function<void(const StepRecord&)> on_step;
    std::function<void(const TrainState&)> on_epoch_end;
};

/// Mean intensity of the corpus; becomes NetworkSpec::scale.
double dataset_scale(std::span<const IntensityImage> dataset);

/// Tiles for one epoch: crop positions and sampling seeds derive only from
/// (config.seed, epoch, tile index).
std::vector<TrainingItem> epoch_items(const TrainConfig& config, const NetworkSpec& spec,
                                      std::span<const IntensityImage> dataset,
                                      std::size_t epoch);

/// Fresh training from `config`, or continuation of `resume` up to config.epochs.
TrainState train(const TrainConfig& config, std::span<const IntensityImage> dataset,
                 std::optional<TrainState> resume = std::nullopt, const TrainHooks& hooks = {});

std::vector<double> epoch_mean_losses(const std::vector<StepRecord>& history);

}  // namespace sdssar

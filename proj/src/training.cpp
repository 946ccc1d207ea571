#include "sdssar/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sdssar/errors.hpp"
#include "sdssar/rng.hpp"

namespace sdssar {

namespace {

void add_scaled(Raster& dst, const Raster& src, double s) {
    for (std::size_t p = 0; p < dst.size(); ++p) dst.values[p] += s * src.values[p];
}

/// Shared body of loss_gradient / evaluate_loss.
LossGradient run_loss(const DespecklerParams& params, std::span<const TrainingItem> batch,
                      const FeatureExtractor& phi, const LossOptions& options,
                      const DespecklerParams* detached, bool want_grad) {
    if (batch.empty()) throw InvalidArgument("loss over an empty batch");
    options.weights.validate();
    const DespecklerParams& frozen = detached ? *detached : params;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    LossGradient out;
    if (want_grad) out.gradient.assign(params.values.size(), 0.0);

    for (const auto& item : batch) {
        const auto& st = item.stack;
        if (item.source.width() != st.source_width || item.source.height() != st.source_height) {
            throw InvalidArgument("training item source does not match its stack");
        }
        const std::size_t K = st.count();
        std::vector<Raster> ys;
        ys.reserve(K);
        for (const auto& s : st.subimages) ys.push_back(s.raster());

        std::vector<ForwardCache> caches(want_grad ? K : 0);
        std::vector<Raster> outs;
        outs.reserve(K);
        for (std::size_t i = 0; i < K; ++i) {
            outs.push_back(network_forward(params, ys[i], want_grad ? &caches[i] : nullptr));
        }

        const auto targets = cycle_targets(ys);
        TermResult cyc = options.log_form ? cyc_desp_log(outs, targets) : cyc_desp_plain(outs, targets);

        // Regularization: f(y) against h(f(stack)); one branch is detached.
        ForwardCache full_cache;
        const bool full_detached = options.stop_branch == StopGradientBranch::full_image;
        const Raster full = network_forward(full_detached ? frozen : params, item.source.raster(),
                                            (want_grad && !full_detached) ? &full_cache : nullptr);
        Raster mapped;
        if (full_detached || !detached) {
            mapped = global_upsample(st, outs);
        } else {
            std::vector<Raster> frozen_outs;
            for (const auto& y : ys) frozen_outs.push_back(network_forward(frozen, y));
            mapped = global_upsample(st, frozen_outs);
        }
        TermResult reg = reg_loss(full, mapped);

        const std::size_t pairs = std::min<std::size_t>(2, K);
        TermResult per = perceptual_loss(phi, std::span(outs).first(pairs), std::span(ys).first(pairs));

        const LossBreakdown lb = total_loss(cyc.value, reg.value, per.value, options.weights);
        out.loss.cyc += lb.cyc * inv_batch;
        out.loss.reg += lb.reg * inv_batch;
        out.loss.per += lb.per * inv_batch;
        out.loss.total += lb.total * inv_batch;
        if (!want_grad) continue;

        std::vector<Raster> g = std::move(cyc.grad);
        const double a = options.weights.alpha;
        const double b = options.weights.beta;
        if (full_detached) {
            const auto gathered = gather_to_subimages(st, reg.grad[1]);
            for (std::size_t i = 0; i < K; ++i) add_scaled(g[i], gathered[i], a);
        } else {
            Raster gf = reg.grad[0];
            for (double& v : gf.values) v *= a * inv_batch;
            network_backward(params, full_cache, gf, out.gradient);
        }
        for (std::size_t i = 0; i < pairs; ++i) add_scaled(g[i], per.grad[i], b);
        for (std::size_t i = 0; i < K; ++i) {
            for (double& v : g[i].values) v *= inv_batch;
            network_backward(params, caches[i], g[i], out.gradient);
        }
    }
    return out;
}

}  // namespace

LossGradient loss_gradient(const DespecklerParams& params, std::span<const TrainingItem> batch,
                           const FeatureExtractor& phi, const LossOptions& options,
                           const DespecklerParams* detached_params) {
    return run_loss(params, batch, phi, options, detached_params, true);
}

LossBreakdown evaluate_loss(const DespecklerParams& params, std::span<const TrainingItem> batch,
                            const FeatureExtractor& phi, const LossOptions& options,
                            const DespecklerParams* detached_params) {
    return run_loss(params, batch, phi, options, detached_params, false).loss;
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               double learning_rate) {
    if (grad.size() != params.size()) throw InvalidArgument("adam: gradient size mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw InvalidArgument("adam: state size mismatch");
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
        state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= learning_rate * mhat / (std::sqrt(vhat) + kAdamEpsilon);
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || decay_every == 0 || !(decay_factor > 0.0) || batch_size == 0 ||
        epochs == 0 || tile_size == 0 || k < 2) {
        throw InvalidArgument("train config: rates, counts and sizes must be positive (k >= 2)");
    }
    if (tile_size % k != 0) throw InvalidArgument("train config: tile size must be divisible by k");
    weights.validate();
    decorrelator.validate();
    network.validate();
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
    return learning_rate * std::pow(decay_factor, static_cast<double>(epoch / decay_every));
}

double dataset_scale(std::span<const IntensityImage> dataset) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& img : dataset) {
        for (double v : img.pixels()) sum += v;
        n += img.size();
    }
    if (n == 0 || !(sum > 0.0)) throw DegenerateInput("training corpus has zero mean intensity");
    return sum / static_cast<double>(n);
}

std::vector<TrainingItem> epoch_items(const TrainConfig& config, const NetworkSpec& spec,
                                      std::span<const IntensityImage> dataset,
                                      std::size_t epoch) {
    if (dataset.empty()) throw InvalidArgument("empty training corpus");
    const std::size_t n_images = dataset.size();
    const std::size_t n_tiles = config.tiles_per_epoch ? config.tiles_per_epoch : n_images;
    const std::size_t k = config.k;
    std::vector<std::size_t> order(n_images);
    std::vector<TrainingItem> items;
    items.reserve(n_tiles);
    for (std::size_t t = 0; t < n_tiles; ++t) {
        if (t % n_images == 0) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            auto rng = make_rng(derive_seed(config.seed, {epoch, t / n_images, 0x0de5}));
            std::shuffle(order.begin(), order.end(), rng);
        }
        const IntensityImage& img = dataset[order[t % n_images]];
        const std::size_t th = (std::min(config.tile_size, img.height()) / k) * k;
        const std::size_t tw = (std::min(config.tile_size, img.width()) / k) * k;
        if (th == 0 || tw == 0) throw InvalidArgument("training image smaller than one patch");
        auto rng = make_rng(derive_seed(config.seed, {epoch, t, 0x711e}));
        std::uniform_int_distribution<std::size_t> rpos(0, img.height() - th);
        std::uniform_int_distribution<std::size_t> cpos(0, img.width() - tw);
        const std::size_t r0 = rpos(rng);
        const std::size_t c0 = cpos(rng);
        IntensityImage tile(to_domain(img.crop(r0, c0, th, tw).raster(), spec));
        TrainingItem item{tile, ra_sample(tile, k, derive_seed(config.seed, {epoch, t, 0x5a3e}))};
        if (config.decorrelate_training) {
            item.stack.subimages[0] = decorrelate(item.stack.subimages[0], config.decorrelator);
        }
        items.push_back(std::move(item));
    }
    return items;
}

TrainState train(const TrainConfig& config, std::span<const IntensityImage> dataset,
                 std::optional<TrainState> resume, const TrainHooks& hooks) {
    config.validate();
    if (dataset.empty()) throw InvalidArgument("empty training corpus");
    TrainState state;
    if (resume) {
        state = std::move(*resume);
        state.params.validate();
    } else {
        NetworkSpec spec = config.network;
        spec.scale = dataset_scale(dataset);
        spec.domain = config.log_form ? IntensityDomain::log1p : IntensityDomain::linear;
        state.params = DespecklerParams::initialize(spec, derive_seed(config.seed, {0x1a17}));
    }
    const FeatureExtractor phi = FeatureExtractor::seeded(config.feature_seed);
    const LossOptions options{config.weights, config.log_form, config.stop_branch};
    std::size_t step = state.history.empty() ? 0 : state.history.back().step + 1;

    for (std::size_t e = state.next_epoch; e < config.epochs; ++e) {
        const double lr = config.learning_rate_at(e);
        const auto items = epoch_items(config, state.params.spec, dataset, e);
        for (std::size_t b = 0; b < items.size(); b += config.batch_size) {
            const std::size_t len = std::min(config.batch_size, items.size() - b);
            LossGradient lg;
            try {
                lg = loss_gradient(state.params, std::span(items).subspan(b, len), phi, options);
            } catch (const NumericOverflow& ex) {
                throw TrainingDiverged(e, "training diverged in epoch " + std::to_string(e) + ": " + ex.what());
            }
            const bool finite = std::isfinite(lg.loss.total) &&
                                std::all_of(lg.gradient.begin(), lg.gradient.end(),
                                            [](double v) { return std::isfinite(v); });
            if (!finite) {
                throw TrainingDiverged(e, "training diverged in epoch " + std::to_string(e) +
                                              ": non-finite loss or gradient");
            }
            adam_step(state.params.values, lg.gradient, state.adam, lr);
            StepRecord rec{e, step++, lg.loss, lr};
            state.history.push_back(rec);
            if (hooks.on_step) hooks.on_step(rec);
        }
        state.next_epoch = e + 1;
        if (hooks.on_epoch_end) hooks.on_epoch_end(state);
    }
    return state;
}

std::vector<double> epoch_mean_losses(const std::vector<StepRecord>& history) {
    std::vector<double> means;
    std::vector<std::size_t> counts;
    std::size_t first = history.empty() ? 0 : history.front().epoch;
    for (const auto& r : history) {
        const std::size_t idx = r.epoch - first;
        if (idx >= means.size()) {
            means.resize(idx + 1, 0.0);
            counts.resize(idx + 1, 0);
        }
        means[idx] += r.loss.total;
        ++counts[idx];
    }
    for (std::size_t i = 0; i < means.size(); ++i)
        if (counts[i]) means[i] /= static_cast<double>(counts[i]);
    return means;
}

}  // namespace sdssar

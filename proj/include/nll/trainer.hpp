#pragma once

#include "nll/augment.hpp"
#include "nll/losses.hpp"
#include "nll/mlp.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace nll {

struct TrainConfig {
    double learning_rate = 0.1;
    double weight_decay = 1e-4;
    double momentum = 0.9;
    int epochs = 150;
    int batch_size = 128;
    std::vector<double> milestones = {0.5, 0.75};
    double lr_decay_factor = 0.1;
    std::uint64_t seed = 0;
    int views_per_example = 1;
    /// Feed the same augmented input as both views (GJS reduces to JS).
    bool identical_views = false;

    /// Throws DomainError on invalid values or a views/loss mismatch.
    void validate(std::span<const LossSpec> losses) const;
};

struct OptimizerState {
    MlpParams velocity;
    std::uint64_t steps = 0;

    static OptimizerState for_params(const MlpParams& params) { return {params.zeros_like(), 0}; }
};

/// g' = g + wd * w; v <- mu * v + g'; w <- w - lr * (g' + mu * v).
void sgd_nesterov_step(MlpParams& params, const MlpGrads& grads, OptimizerState& state, double lr,
                       double momentum, double weight_decay);

/// Base rate times decay_factor^(milestones passed); milestone f is passed at
/// epoch >= f * epochs.
double lr_at_epoch(const TrainConfig& config, int epoch);

/// What the trainer is allowed to see: inputs, observed labels, and an
/// optional per-example loss selector. True labels never enter here.
struct TrainView {
    std::size_t dim = 0;
    std::span<const double> features;  // row-major N x dim
    std::span<const int> labels;
    std::span<const std::uint8_t> loss_index;  // empty: every example uses losses[0]

    std::size_t size() const noexcept { return labels.size(); }
};

struct EpochStats {
    double mean_loss = 0.0;
    double learning_rate = 0.0;
};

/// One pass of seeded-shuffled minibatches. Every example gets
/// config.views_per_example independent augmentations.
EpochStats train_epoch(MlpParams& params, OptimizerState& state, const TrainView& data,
                       const AugmentSpec& augment, std::span<const LossSpec> losses,
                       const TrainConfig& config, int epoch);

}  // namespace nll

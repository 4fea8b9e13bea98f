#include "nll/trainer.hpp"

#include "nll/rng.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace nll {

void TrainConfig::validate(std::span<const LossSpec> losses) const {
    if (!(learning_rate >= 0.0)) throw DomainError("learning rate must be nonnegative");
    if (!(weight_decay >= 0.0)) throw DomainError("weight decay must be nonnegative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
    if (epochs <= 0) throw DomainError("epochs must be positive");
    if (batch_size <= 0) throw DomainError("batch size must be positive");
    if (!(lr_decay_factor > 0.0)) throw DomainError("lr decay factor must be positive");
    double prev = 0.0;
    for (double m : milestones) {
        if (!(m > prev && m < 1.0)) throw DomainError("milestones must be strictly increasing in (0, 1)");
        prev = m;
    }
    int needed = 1;
    for (const auto& l : losses) needed = std::max(needed, l.views());
    if (views_per_example != needed)
        throw DomainError("views_per_example is " + std::to_string(views_per_example) + " but the loss needs " +
                          std::to_string(needed));
}

void sgd_nesterov_step(MlpParams& params, const MlpGrads& grads, OptimizerState& state, double lr,
                       double momentum, double weight_decay) {
    if (grads.layers.size() != params.layers.size() || state.velocity.layers.size() != params.layers.size())
        throw DomainError("sgd step: layer count mismatch");
    auto step = [&](auto& w, const auto& g, auto& v) {
        if (w.size() != g.size() || w.size() != v.size()) throw DomainError("sgd step: shape mismatch");
        auto gd = (g + weight_decay * w).eval();
        v = momentum * v + gd;
        w -= lr * (gd + momentum * v);
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        step(params.layers[l].weight, grads.layers[l].weight, state.velocity.layers[l].weight);
        step(params.layers[l].bias, grads.layers[l].bias, state.velocity.layers[l].bias);
    }
    ++state.steps;
}

double lr_at_epoch(const TrainConfig& config, int epoch) {
    if (epoch < 0 || epoch >= config.epochs)
        throw DomainError("epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(config.epochs) + ")");
    double lr = config.learning_rate;
    for (double m : config.milestones)
        if (static_cast<double>(epoch) >= m * static_cast<double>(config.epochs)) lr *= config.lr_decay_factor;
    return lr;
}

EpochStats train_epoch(MlpParams& params, OptimizerState& state, const TrainView& data,
                       const AugmentSpec& augment, std::span<const LossSpec> losses,
                       const TrainConfig& config, int epoch) {
    config.validate(losses);
    const std::size_t n = data.size();
    if (n == 0) throw DomainError("train_epoch: empty dataset");
    if (data.features.size() != n * data.dim) throw DomainError("train_epoch: feature buffer size mismatch");
    if (!data.loss_index.empty() && data.loss_index.size() != n)
        throw DomainError("train_epoch: loss_index length mismatch");

    const auto e = static_cast<std::uint64_t>(epoch);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(config.seed, {stream::kShuffle, e}));
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(shuffle_rng() % (i + 1));
        std::swap(order[i], order[j]);
    }
    Rng aug_rng(derive_seed(config.seed, {stream::kAugment, e}));

    const double lr = lr_at_epoch(config, epoch);
    const auto nviews = static_cast<std::size_t>(config.views_per_example);
    const auto dim = static_cast<Eigen::Index>(data.dim);
    double loss_sum = 0.0;
    std::vector<Eigen::MatrixXd> views(nviews);
    std::vector<int> labels;
    std::vector<std::uint8_t> index;

    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
        const auto b = static_cast<Eigen::Index>(stop - start);
        for (auto& v : views) v.resize(dim, b);
        labels.resize(static_cast<std::size_t>(b));
        index.resize(data.loss_index.empty() ? 0 : static_cast<std::size_t>(b));
        for (Eigen::Index c = 0; c < b; ++c) {
            const std::size_t ex = order[start + static_cast<std::size_t>(c)];
            const std::span<const double> x(data.features.data() + ex * data.dim, data.dim);
            for (std::size_t v = 0; v < nviews; ++v) {
                std::span<double> col(views[v].data() + c * dim, data.dim);
                if (v > 0 && config.identical_views)
                    std::copy_n(views[0].data() + c * dim, data.dim, col.data());
                else
                    augment_into(x, augment, aug_rng, col);
            }
            labels[static_cast<std::size_t>(c)] = data.labels[ex];
            if (!index.empty()) index[static_cast<std::size_t>(c)] = data.loss_index[ex];
        }
        const auto result = backward_batch(params, views, labels, losses, index);
        loss_sum += result.loss * static_cast<double>(b);
        sgd_nesterov_step(params, result.grads, state, lr, config.momentum, config.weight_decay);
    }
    return {loss_sum / static_cast<double>(n), lr};
}

}  // namespace nll

#pragma once

#include "nll/divergences.hpp"
#include "nll/losses.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nll {

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

/// Fully connected network: rectifier on every hidden layer, raw logits out.
struct MlpParams {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return static_cast<std::size_t>(layers.front().weight.cols()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(layers.back().weight.rows()); }
    std::vector<std::size_t> layer_sizes() const;
    std::size_t num_params() const;

    /// Weights (column-major) then bias, layer by layer.
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> values);

    /// Zero-valued parameters of the same shape.
    MlpParams zeros_like() const;

    bool operator==(const MlpParams& other) const;
};

using MlpGrads = MlpParams;

/// Weights ~ U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), biases zero.
MlpParams init_params(std::span<const std::size_t> layer_sizes, std::uint64_t seed);

std::vector<double> forward(const MlpParams& params, std::span<const double> x);

/// Batched forward: columns of `inputs` are examples; returns K x B logits.
Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs);

/// Softmax of the logits and the argmax class (lowest index on ties).
std::pair<ProbDist, std::size_t> predict(const MlpParams& params, std::span<const double> x);

/// Argmax class for every column of `inputs`.
std::vector<int> predict_classes(const MlpParams& params, const Eigen::MatrixXd& inputs);

std::size_t argmax(std::span<const double> v);

struct BackwardResult {
    double loss = 0.0;  // mean over the batch
    MlpGrads grads;
};

/// Mean loss and exact parameter gradients over a batch.
/// `views[v]` holds view v of every example as a column (d x B). Example b
/// uses losses[loss_index[b]] (or losses[0] when loss_index is empty) and
/// consumes the first views() of the supplied views.
BackwardResult backward_batch(const MlpParams& params, std::span<const Eigen::MatrixXd> views,
                              std::span<const int> labels, std::span<const LossSpec> losses,
                              std::span<const std::uint8_t> loss_index = {});

/// Single-example form: one view for single-view losses, two for GJS and the
/// mean ablation.
BackwardResult backward(const MlpParams& params, std::span<const std::vector<double>> views,
                        int label, const LossSpec& loss);

/// Versioned little-endian checkpoint: magic "NLLB1", layer count, then per
/// layer rows, cols, row-major weights, bias length, bias (all u64 / f64).
void save_checkpoint(std::ostream& out, const MlpParams& params);
void save_checkpoint(const std::string& path, const MlpParams& params);
MlpParams load_checkpoint(std::istream& in);
MlpParams load_checkpoint(const std::string& path);

}  // namespace nll

#pragma once

#include "nll/augment.hpp"
#include "nll/dataset.hpp"
#include "nll/mlp.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace nll {

/// One row of the per-epoch metrics CSV. Subset fields are empty when the
/// subset has no examples.
struct MetricsRecord {
    int epoch = 0;
    double learning_rate = 0.0;
    double loss_value = 0.0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    double train_consistency_all = 0.0;
    std::optional<double> train_consistency_clean;
    std::optional<double> train_consistency_noisy;
    std::optional<double> train_accuracy_clean;
    std::optional<double> train_accuracy_noisy;
};

enum class LabelField { OBSERVED, TRUE };

/// Column-major d x N matrix of the dataset's inputs.
Eigen::MatrixXd feature_matrix(const NoisyDataset& data);

/// Per-example indicator argmax f(x) == argmax f(augment(x)). Each example's
/// augmentation stream is derived from (seed, feature bytes), so the result for
/// an example does not depend on which other examples are measured with it.
std::vector<std::uint8_t> consistency_matches(const MlpParams& params, const NoisyDataset& data,
                                              const AugmentSpec& augment, std::uint64_t seed);

/// Fraction of examples whose prediction survives one augmentation.
double consistency(const MlpParams& params, const NoisyDataset& data, const AugmentSpec& augment,
                   std::uint64_t seed);

struct SubsetConsistency {
    std::optional<double> clean;
    std::optional<double> noisy;
    std::size_t n_clean = 0;
    std::size_t n_noisy = 0;
};

/// Consistency restricted to the clean and noisy subsets (requires flags).
SubsetConsistency subset_consistency(const MlpParams& params, const NoisyDataset& data,
                                     const AugmentSpec& augment, std::uint64_t seed);

double accuracy(const MlpParams& params, const NoisyDataset& data, LabelField field = LabelField::OBSERVED);

struct SubsetAccuracy {
    std::optional<double> clean;
    std::optional<double> noisy;
};

/// Accuracy w.r.t. observed labels on each subset.
SubsetAccuracy subset_accuracy(const MlpParams& params, const NoisyDataset& data);

}  // namespace nll

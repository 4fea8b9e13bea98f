#pragma once

#include "nll/dataset.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>

namespace nll {

/// K isotropic Gaussian clusters with equal priors.
struct GaussianMixture {
    Eigen::MatrixXd means;  // dim x K
    double sigma = 1.0;

    std::size_t num_classes() const { return static_cast<std::size_t>(means.cols()); }
    std::size_t dim() const { return static_cast<std::size_t>(means.rows()); }

    /// Maximum-likelihood class; with shared isotropic covariance and equal
    /// priors this is the nearest mean (lowest index on ties).
    int bayes_classify(std::span<const double> x) const;
};

/// Means at radius `separation`: an orthonormal frame rotated by a seeded
/// random orthogonal matrix when K <= dim, seeded random directions otherwise.
GaussianMixture make_mixture(std::size_t num_classes, std::size_t dim, double separation, double sigma,
                             std::uint64_t seed);

/// n_per_class draws per class, class-major order, labels clean.
NoisyDataset sample_mixture(const GaussianMixture& mixture, std::size_t n_per_class, std::uint64_t seed);

/// make_mixture + sample_mixture from one seed.
NoisyDataset generate_synthetic(std::size_t num_classes, std::size_t n_per_class, std::size_t dim,
                                double separation, double sigma, std::uint64_t seed);

struct Split {
    NoisyDataset train;
    NoisyDataset validation;
};

/// Seeded stratified split: round(fraction * n_c) examples of each class go
/// to validation. Validation keeps (and is labeled by) true labels.
Split split(const NoisyDataset& data, double validation_fraction, std::uint64_t seed);

}  // namespace nll

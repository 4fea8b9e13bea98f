#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace nll {

/// Thrown when an input violates an operation's domain (bad simplex, size
/// mismatch, hyperparameter out of range, malformed config).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produces a non-finite value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Floor applied to any probability that appears inside a log or as a KL
/// denominator.
inline constexpr double kProbFloor = 1e-12;
inline constexpr double kSimplexTol = 1e-9;

/// A point on the probability simplex with K >= 2 entries.
class ProbDist {
public:
    /// Validates `probs` against the simplex. Sums within kSimplexTol of 1 are
    /// renormalized; anything further off is rejected.
    explicit ProbDist(std::vector<double> probs);

    static ProbDist onehot(std::size_t num_classes, std::size_t label);
    static ProbDist uniform(std::size_t num_classes);

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const noexcept { return probs_[i]; }
    std::span<const double> values() const noexcept { return probs_; }

private:
    std::vector<double> probs_;
};

/// Positive mixture weights summing to one; every entry strictly inside (0, 1).
class MixtureWeights {
public:
    explicit MixtureWeights(std::vector<double> weights);

    static MixtureWeights binary(double pi);

    std::size_t size() const noexcept { return weights_.size(); }
    double operator[](std::size_t i) const noexcept { return weights_[i]; }
    std::span<const double> values() const noexcept { return weights_; }

private:
    std::vector<double> weights_;
};

/// Shannon entropy in nats with 0 log 0 = 0.
double entropy(const ProbDist& p);

/// KL(p || q) in nats. q is floored at kProbFloor before the division.
double kl(const ProbDist& p, const ProbDist& q);

/// Weighted mixture sum_j w_j * dists_j.
ProbDist mixture(const MixtureWeights& w, std::span<const ProbDist> dists);

/// Generalized Jensen-Shannon divergence: sum_j w_j KL(dists_j || m) with
/// m the weighted mixture. Bounded above by entropy(w).
double js_weighted(const MixtureWeights& w, std::span<const ProbDist> dists);

/// Two-distribution JS with weights (pi, 1 - pi); pi must lie in (0, 1).
double js_pi(double pi, const ProbDist& p1, const ProbDist& p2);

// Raw-span kernels used by the loss module on already-validated inputs.
namespace detail {
double entropy(std::span<const double> p);
double kl(std::span<const double> p, std::span<const double> q);
}  // namespace detail

}  // namespace nll

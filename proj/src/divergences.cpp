#include "nll/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace nll {

ProbDist::ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.size() < 2)
        throw DomainError("ProbDist needs at least 2 entries, got " + std::to_string(probs_.size()));
    double sum = 0.0;
    for (double v : probs_) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw DomainError("ProbDist entry outside [0, 1]: " + std::to_string(v));
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
        throw DomainError("ProbDist entries sum to " + std::to_string(sum) + ", not 1");
    if (sum != 1.0)
        for (double& v : probs_) v /= sum;
}

ProbDist ProbDist::onehot(std::size_t num_classes, std::size_t label) {
    if (label >= num_classes)
        throw DomainError("onehot label " + std::to_string(label) + " out of range");
    std::vector<double> v(num_classes, 0.0);
    v[label] = 1.0;
    return ProbDist(std::move(v));
}

ProbDist ProbDist::uniform(std::size_t num_classes) {
    if (num_classes < 2) throw DomainError("uniform needs at least 2 classes");
    return ProbDist(std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)));
}

MixtureWeights::MixtureWeights(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.empty()) throw DomainError("MixtureWeights is empty");
    double sum = 0.0;
    for (double w : weights_) {
        if (!(w > 0.0 && w < 1.0))
            throw DomainError("mixture weight outside (0, 1): " + std::to_string(w));
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw DomainError("mixture weights sum to " + std::to_string(sum) + ", not 1");
}

MixtureWeights MixtureWeights::binary(double pi) {
    if (!(pi > 0.0 && pi < 1.0))
        throw DomainError("pi must lie in (0, 1), got " + std::to_string(pi));
    return MixtureWeights({pi, 1.0 - pi});
}

namespace detail {

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(std::max(v, kProbFloor));
    return h;
}

double kl(std::span<const double> p, std::span<const double> q) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        d += p[i] * (std::log(std::max(p[i], kProbFloor)) - std::log(std::max(q[i], kProbFloor)));
    }
    // Rounding can leave a tiny negative residue when p == q.
    return std::max(d, 0.0);
}

}  // namespace detail

double entropy(const ProbDist& p) { return detail::entropy(p.values()); }

double kl(const ProbDist& p, const ProbDist& q) {
    if (p.size() != q.size())
        throw DomainError("kl: dimension mismatch " + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()));
    return detail::kl(p.values(), q.values());
}

ProbDist mixture(const MixtureWeights& w, std::span<const ProbDist> dists) {
    if (dists.size() != w.size())
        throw DomainError("mixture: " + std::to_string(w.size()) + " weights for " +
                          std::to_string(dists.size()) + " distributions");
    const std::size_t k = dists.front().size();
    std::vector<double> m(k, 0.0);
    for (std::size_t j = 0; j < dists.size(); ++j) {
        if (dists[j].size() != k) throw DomainError("mixture: dimension mismatch");
        for (std::size_t i = 0; i < k; ++i) m[i] += w[j] * dists[j][i];
    }
    return ProbDist(std::move(m));
}

double js_weighted(const MixtureWeights& w, std::span<const ProbDist> dists) {
    const ProbDist m = mixture(w, dists);
    double d = 0.0;
    for (std::size_t j = 0; j < dists.size(); ++j) d += w[j] * kl(dists[j], m);
    return d;
}

double js_pi(double pi, const ProbDist& p1, const ProbDist& p2) {
    const ProbDist dists[] = {p1, p2};
    return js_weighted(MixtureWeights::binary(pi), dists);
}

}  // namespace nll

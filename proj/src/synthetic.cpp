#include "nll/synthetic.hpp"

#include "nll/divergences.hpp"
#include "nll/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace nll {

int GaussianMixture::bayes_classify(std::span<const double> x) const {
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < means.cols(); ++k) {
        const double d = (v - means.col(k)).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

GaussianMixture make_mixture(std::size_t num_classes, std::size_t dim, double separation, double sigma,
                             std::uint64_t seed) {
    if (num_classes < 2) throw DomainError("synthetic data needs at least 2 classes");
    if (dim < 2) throw DomainError("synthetic data needs dim >= 2");
    if (!(sigma > 0.0)) throw DomainError("synthetic sigma must be positive");
    if (!(separation > 0.0)) throw DomainError("synthetic separation must be positive");

    Rng rng(derive_seed(seed, {stream::kMixtureMeans}));
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto d = static_cast<Eigen::Index>(dim);
    const auto k = static_cast<Eigen::Index>(num_classes);
    Eigen::MatrixXd gauss(d, num_classes <= dim ? d : k);
    for (Eigen::Index c = 0; c < gauss.cols(); ++c)
        for (Eigen::Index r = 0; r < d; ++r) gauss(r, c) = normal(rng);

    GaussianMixture mix;
    mix.sigma = sigma;
    if (num_classes <= dim) {
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
        mix.means = separation * q.leftCols(k);
    } else {
        mix.means = gauss;
        for (Eigen::Index c = 0; c < k; ++c) mix.means.col(c) *= separation / mix.means.col(c).norm();
    }
    return mix;
}

NoisyDataset sample_mixture(const GaussianMixture& mixture, std::size_t n_per_class, std::uint64_t seed) {
    if (n_per_class == 0) throw DomainError("synthetic data needs at least one example per class");
    Rng rng(derive_seed(seed, {stream::kSamples}));
    std::normal_distribution<double> normal(0.0, 1.0);
    NoisyDataset data;
    data.dim = mixture.dim();
    data.num_classes = mixture.num_classes();
    data.features.reserve(data.dim * data.num_classes * n_per_class);
    for (std::size_t c = 0; c < data.num_classes; ++c)
        for (std::size_t i = 0; i < n_per_class; ++i) {
            for (std::size_t j = 0; j < data.dim; ++j)
                data.features.push_back(mixture.means(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) +
                                        mixture.sigma * normal(rng));
            data.observed.push_back(static_cast<int>(c));
        }
    data.true_labels = data.observed;
    data.refresh_flags();
    return data;
}

NoisyDataset generate_synthetic(std::size_t num_classes, std::size_t n_per_class, std::size_t dim,
                                double separation, double sigma, std::uint64_t seed) {
    return sample_mixture(make_mixture(num_classes, dim, separation, sigma, seed), n_per_class, seed);
}

Split split(const NoisyDataset& data, double validation_fraction, std::uint64_t seed) {
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw DomainError("validation fraction must lie in (0, 1)");
    const auto& labels = data.has_true_labels() ? data.true_labels : data.observed;
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) by_class[labels[i]].push_back(i);

    Rng rng(derive_seed(seed, {stream::kSplit}));
    std::vector<std::size_t> train_idx, val_idx;
    for (auto& [label, idx] : by_class) {
        if (idx.size() < 2)
            throw DomainError("class " + std::to_string(label) + " has fewer than 2 examples; cannot split");
        for (std::size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[static_cast<std::size_t>(rng() % (i + 1))]);
        auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(idx.size())));
        n_val = std::clamp<std::size_t>(n_val, 1, idx.size() - 1);
        val_idx.insert(val_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
        train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    Split out{data.select(train_idx), data.select(val_idx)};
    if (out.validation.has_true_labels()) out.validation = out.validation.clean_copy();
    return out;
}

}  // namespace nll

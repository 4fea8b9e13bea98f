#include "nll/metrics.hpp"

#include "nll/rng.hpp"

#include <bit>

namespace nll {

namespace {

std::uint64_t example_seed(std::uint64_t seed, std::span<const double> x) {
    std::uint64_t h = mix64(seed ^ stream::kConsistency);
    for (double v : x) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    return h;
}

double fraction(std::size_t hits, std::size_t n) { return static_cast<double>(hits) / static_cast<double>(n); }

}  // namespace

Eigen::MatrixXd feature_matrix(const NoisyDataset& data) {
    return Eigen::Map<const Eigen::MatrixXd>(data.features.data(), static_cast<Eigen::Index>(data.dim),
                                             static_cast<Eigen::Index>(data.size()));
}

std::vector<std::uint8_t> consistency_matches(const MlpParams& params, const NoisyDataset& data,
                                              const AugmentSpec& augment, std::uint64_t seed) {
    if (data.empty()) throw DomainError("consistency: empty dataset");
    const Eigen::MatrixXd original = feature_matrix(data);
    Eigen::MatrixXd augmented(original.rows(), original.cols());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto x = data.example(i);
        Rng rng(example_seed(seed, x));
        augment_into(x, augment, rng, {augmented.data() + i * data.dim, data.dim});
    }
    const auto a = predict_classes(params, original);
    const auto b = predict_classes(params, augmented);
    std::vector<std::uint8_t> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] == b[i] ? 1 : 0;
    return out;
}

double consistency(const MlpParams& params, const NoisyDataset& data, const AugmentSpec& augment,
                   std::uint64_t seed) {
    const auto m = consistency_matches(params, data, augment, seed);
    std::size_t hits = 0;
    for (auto v : m) hits += v;
    return fraction(hits, m.size());
}

SubsetConsistency subset_consistency(const MlpParams& params, const NoisyDataset& data,
                                     const AugmentSpec& augment, std::uint64_t seed) {
    if (!data.has_true_labels() || data.is_noisy.size() != data.size())
        throw DomainError("subset_consistency needs noisy flags");
    const auto m = consistency_matches(params, data, augment, seed);
    std::size_t hit_clean = 0, hit_noisy = 0;
    SubsetConsistency out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (data.is_noisy[i]) {
            ++out.n_noisy;
            hit_noisy += m[i];
        } else {
            ++out.n_clean;
            hit_clean += m[i];
        }
    }
    if (out.n_clean) out.clean = fraction(hit_clean, out.n_clean);
    if (out.n_noisy) out.noisy = fraction(hit_noisy, out.n_noisy);
    return out;
}

double accuracy(const MlpParams& params, const NoisyDataset& data, LabelField field) {
    if (data.empty()) throw DomainError("accuracy: empty dataset");
    if (field == LabelField::TRUE && !data.has_true_labels())
        throw DomainError("accuracy: true labels requested but absent");
    const auto& labels = field == LabelField::TRUE ? data.true_labels : data.observed;
    const auto pred = predict_classes(params, feature_matrix(data));
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == labels[i] ? 1 : 0;
    return fraction(hits, pred.size());
}

SubsetAccuracy subset_accuracy(const MlpParams& params, const NoisyDataset& data) {
    if (!data.has_true_labels() || data.is_noisy.size() != data.size())
        throw DomainError("subset_accuracy needs noisy flags");
    const auto pred = predict_classes(params, feature_matrix(data));
    std::size_t n_clean = 0, n_noisy = 0, hit_clean = 0, hit_noisy = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool hit = pred[i] == data.observed[i];
        if (data.is_noisy[i]) {
            ++n_noisy;
            hit_noisy += hit;
        } else {
            ++n_clean;
            hit_clean += hit;
        }
    }
    SubsetAccuracy out;
    if (n_clean) out.clean = fraction(hit_clean, n_clean);
    if (n_noisy) out.noisy = fraction(hit_noisy, n_noisy);
    return out;
}

}  // namespace nll

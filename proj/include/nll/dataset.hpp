#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nll {

/// Examples stored row-major: features of example i occupy
/// [i * dim, (i + 1) * dim). True labels and noisy flags are optional
/// (empty vectors) and, when present, is_noisy[i] == (observed[i] != true_labels[i]).
struct NoisyDataset {
    std::size_t dim = 0;
    std::size_t num_classes = 0;
    std::vector<double> features;
    std::vector<int> observed;
    std::vector<int> true_labels;
    std::vector<std::uint8_t> is_noisy;

    std::size_t size() const noexcept { return observed.size(); }
    bool empty() const noexcept { return observed.empty(); }
    bool has_true_labels() const noexcept { return !true_labels.empty(); }

    std::span<const double> example(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }

    /// Recomputes is_noisy from the label vectors.
    void refresh_flags();

    /// Checks shape consistency, label ranges, and the flag invariant.
    void validate() const;

    /// Subset in the order given by `indices`.
    NoisyDataset select(std::span<const std::size_t> indices) const;

    /// Copy where observed labels are replaced by true labels (flags cleared).
    NoisyDataset clean_copy() const;

    /// Per-feature population standard deviation.
    std::vector<double> feature_std() const;
};

/// Writes `feat_0..feat_{d-1},observed_label,true_label,is_noisy`.
void write_dataset_csv(std::ostream& out, const NoisyDataset& data);
void write_dataset_csv(const std::string& path, const NoisyDataset& data);

/// Reads the CSV written above. `num_classes` of 0 infers K as max label + 1.
/// Empty true_label cells mean the true labels are unknown.
NoisyDataset read_dataset_csv(std::istream& in, std::size_t num_classes = 0);
NoisyDataset read_dataset_csv(const std::string& path, std::size_t num_classes = 0);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace nll

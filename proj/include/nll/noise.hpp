#pragma once

#include "nll/dataset.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nll {

enum class NoiseKind { SYMMETRIC, ASYMMETRIC_MAP, ASYMMETRIC_CYCLE };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view name);

/// Row-stochastic K x K matrix; at(i, j) = P(observed = j | true = i).
class TransitionMatrix {
public:
    explicit TransitionMatrix(std::size_t num_classes);
    /// Validates nonnegativity and unit row sums (1e-12).
    TransitionMatrix(std::size_t num_classes, std::vector<double> row_major);

    static TransitionMatrix identity(std::size_t num_classes);

    std::size_t size() const noexcept { return k_; }
    double at(std::size_t i, std::size_t j) const { return m_[i * k_ + j]; }
    std::span<const double> row(std::size_t i) const { return {m_.data() + i * k_, k_}; }

    void validate() const;

private:
    friend TransitionMatrix symmetric_transition(std::size_t, double);
    friend TransitionMatrix asymmetric_map_transition(std::size_t, double, const std::map<int, int>&);
    friend TransitionMatrix asymmetric_cycle_transition(std::size_t, double, const std::vector<std::vector<int>>&);
    double& mut(std::size_t i, std::size_t j) { return m_[i * k_ + j]; }

    std::size_t k_;
    std::vector<double> m_;
};

struct NoiseSpec {
    NoiseKind kind = NoiseKind::SYMMETRIC;
    double rate = 0.0;
    std::map<int, int> class_map;            // ASYMMETRIC_MAP
    std::vector<std::vector<int>> groups;    // ASYMMETRIC_CYCLE, ordered
    std::uint64_t seed = 0;

    TransitionMatrix transition(std::size_t num_classes) const;
};

/// T = (1 - eta) I + (eta / K) 1 1^T; resampling may keep the true label, so
/// the expected flip fraction is eta (1 - 1/K).
TransitionMatrix symmetric_transition(std::size_t num_classes, double eta);

/// Mapped classes i -> j get T[i][i] = 1 - eta, T[i][j] = eta; unmapped rows
/// are identity.
TransitionMatrix asymmetric_map_transition(std::size_t num_classes, double eta,
                                           const std::map<int, int>& class_map);

/// Within each ordered group c_0..c_{g-1}, class c_t moves to c_{(t+1) mod g}
/// with probability eta. Groups must partition {0..K-1}.
TransitionMatrix asymmetric_cycle_transition(std::size_t num_classes, double eta,
                                             const std::vector<std::vector<int>>& groups);

struct NoisyLabels {
    std::vector<int> observed;
    std::vector<std::uint8_t> is_noisy;
};

/// Draws each observed label independently from row T[true].
NoisyLabels inject_noise(std::span<const int> clean_labels, const TransitionMatrix& T, std::uint64_t seed);

/// Applies inject_noise to a dataset whose observed labels are currently the
/// true labels.
void inject_noise(NoisyDataset& data, const TransitionMatrix& T, std::uint64_t seed);

struct NoiseStats {
    std::size_t total = 0;
    std::size_t flipped = 0;
    double overall = 0.0;
    std::vector<std::size_t> per_class_total;    // by true class
    std::vector<std::size_t> per_class_flipped;
    std::vector<double> per_class;
};

NoiseStats noise_stats(const NoisyDataset& data);

void write_transition_csv(std::ostream& out, const TransitionMatrix& T);
TransitionMatrix read_transition_csv(std::istream& in);

/// "9:1,2:0,3:5,5:3,4:7" -> {9->1, 2->0, ...}
std::map<int, int> parse_class_map(std::string_view text);
/// "0 1 2 3 4;5 6 7 8 9" -> {{0..4}, {5..9}}
std::vector<std::vector<int>> parse_groups(std::string_view text);
/// Consecutive groups of `size` classes, e.g. 100 classes -> 20 groups of 5.
std::vector<std::vector<int>> consecutive_groups(std::size_t num_classes, std::size_t size);

}  // namespace nll

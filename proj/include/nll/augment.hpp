#pragma once

#include "nll/rng.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace nll {

enum class AugmentStrength { NONE, WEAK, FULL };

std::string_view to_string(AugmentStrength s);
AugmentStrength parse_augment_strength(std::string_view name);

/// x' = s * x + eps, with s ~ U(scale_lo, scale_hi) drawn once per view and
/// eps_j ~ N(0, (jitter * feature_std_j)^2). An empty feature_std means unit
/// scale on every coordinate.
struct AugmentSpec {
    AugmentStrength strength = AugmentStrength::NONE;
    double jitter = 0.0;
    double scale_lo = 1.0;
    double scale_hi = 1.0;
    std::vector<double> feature_std;

    /// Default parameters for a strength level: WEAK = (0.05, [0.95, 1.05]),
    /// FULL = (0.15, [0.8, 1.2]).
    static AugmentSpec from_strength(AugmentStrength strength, std::vector<double> feature_std = {});

    void validate() const;
};

/// NONE returns x unchanged and consumes no randomness.
std::vector<double> augment(std::span<const double> x, const AugmentSpec& spec, Rng& rng);

/// Writes the perturbed vector into `out` (same length as x).
void augment_into(std::span<const double> x, const AugmentSpec& spec, Rng& rng, std::span<double> out);

/// M independent draws of augment().
std::vector<std::vector<double>> sample_views(std::span<const double> x, const AugmentSpec& spec,
                                              Rng& rng, int num_views);

}  // namespace nll

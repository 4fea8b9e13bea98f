#include "nll/augment.hpp"

#include "nll/divergences.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace nll {

std::string_view to_string(AugmentStrength s) {
    switch (s) {
        case AugmentStrength::NONE: return "NONE";
        case AugmentStrength::WEAK: return "WEAK";
        case AugmentStrength::FULL: return "FULL";
    }
    return "?";
}

AugmentStrength parse_augment_strength(std::string_view name) {
    std::string s(name);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "NONE") return AugmentStrength::NONE;
    if (s == "WEAK") return AugmentStrength::WEAK;
    if (s == "FULL") return AugmentStrength::FULL;
    throw DomainError("unknown augment strength '" + std::string(name) + "'");
}

AugmentSpec AugmentSpec::from_strength(AugmentStrength strength, std::vector<double> feature_std) {
    AugmentSpec spec;
    spec.strength = strength;
    spec.feature_std = std::move(feature_std);
    switch (strength) {
        case AugmentStrength::NONE: break;
        case AugmentStrength::WEAK:
            spec.jitter = 0.05;
            spec.scale_lo = 0.95;
            spec.scale_hi = 1.05;
            break;
        case AugmentStrength::FULL:
            spec.jitter = 0.15;
            spec.scale_lo = 0.8;
            spec.scale_hi = 1.2;
            break;
    }
    return spec;
}

void AugmentSpec::validate() const {
    if (!(jitter >= 0.0)) throw DomainError("augment jitter must be nonnegative");
    if (!(scale_lo > 0.0 && scale_lo <= scale_hi)) throw DomainError("augment needs 0 < scale_lo <= scale_hi");
    for (double s : feature_std)
        if (!(s >= 0.0)) throw DomainError("augment feature_std must be nonnegative");
}

void augment_into(std::span<const double> x, const AugmentSpec& spec, Rng& rng, std::span<double> out) {
    if (out.size() != x.size()) throw DomainError("augment output length does not match input");
    if (spec.strength == AugmentStrength::NONE) {
        std::copy(x.begin(), x.end(), out.begin());
        return;
    }
    if (!spec.feature_std.empty() && spec.feature_std.size() != x.size())
        throw DomainError("augment feature_std length does not match input dimension");
    const double s = spec.scale_lo + (spec.scale_hi - spec.scale_lo) * uniform01(rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double sigma = spec.jitter * (spec.feature_std.empty() ? 1.0 : spec.feature_std[j]);
        const double eps = sigma > 0.0 ? sigma * normal(rng) : 0.0;
        out[j] = s * x[j] + eps;
    }
}

std::vector<double> augment(std::span<const double> x, const AugmentSpec& spec, Rng& rng) {
    std::vector<double> out(x.size());
    augment_into(x, spec, rng, out);
    return out;
}

std::vector<std::vector<double>> sample_views(std::span<const double> x, const AugmentSpec& spec,
                                              Rng& rng, int num_views) {
    if (num_views < 1) throw DomainError("sample_views needs at least one view");
    std::vector<std::vector<double>> views;
    views.reserve(static_cast<std::size_t>(num_views));
    for (int v = 0; v < num_views; ++v) views.push_back(augment(x, spec, rng));
    return views;
}

}  // namespace nll

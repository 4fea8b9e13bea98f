#pragma once

#include "nll/augment.hpp"
#include "nll/divergences.hpp"
#include "nll/losses.hpp"
#include "nll/noise.hpp"
#include "nll/trainer.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nll {

/// Bad or unknown configuration key; carries the offending key.
class ConfigError : public DomainError {
public:
    ConfigError(std::string key, const std::string& what)
        : DomainError("config key '" + key + "': " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Flat `key = value` settings with `#` comments. Later assignments override
/// earlier ones; keys are checked against the documented list on insertion.
class KeyValues {
public:
    static KeyValues parse(std::istream& in);
    static KeyValues parse_file(const std::string& path);
    static KeyValues parse_string(std::string_view text);

    /// Throws ConfigError for keys outside known_keys().
    void set(const std::string& key, const std::string& value);
    void merge(const KeyValues& overrides);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;
    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
    std::string get_string(const std::string& key, std::string fallback) const;

    static const std::vector<std::string>& known_keys();

private:
    std::map<std::string, std::string> values_;
};

struct DataSpec {
    std::size_t classes = 10;
    std::size_t per_class = 1112;
    std::size_t test_per_class = 500;
    std::size_t dim = 16;
    double separation = 3.45;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    std::string csv_path;       // overrides the synthetic generator when set
    std::string test_csv_path;  // optional clean test set for csv_path
};

struct ExperimentConfig {
    DataSpec data;
    NoiseSpec noise;
    LossSpec loss;                       // clean examples in mixed mode
    std::optional<LossSpec> noisy_loss;  // set: mixed clean/noisy loss mode
    TrainConfig train;
    std::vector<std::size_t> hidden = {64, 64};
    AugmentStrength augment_strength = AugmentStrength::FULL;
    std::optional<double> augment_jitter;
    std::optional<double> augment_scale_lo;
    std::optional<double> augment_scale_hi;
    double validation_fraction = 0.10;
    int metrics_stride = 1;
    std::string output;

    bool mixed() const noexcept { return noisy_loss.has_value(); }
    std::vector<LossSpec> losses() const;

    /// Sets train.views_per_example from the loss kind(s).
    void sync_views();
    void validate() const;

    /// Augment parameters for a strength with this config's overrides applied.
    AugmentSpec augment_spec(std::vector<double> feature_std) const;

    static ExperimentConfig from_key_values(const KeyValues& kv);
};

struct NoiseSetting {
    NoiseKind kind = NoiseKind::SYMMETRIC;
    double rate = 0.4;

    std::string describe() const;
};

/// "symmetric:0.2,asymmetric_map:0.4"
std::vector<NoiseSetting> parse_noise_settings(std::string_view text);

struct SweepGrid {
    std::vector<double> learning_rates = {0.01, 0.05, 0.1, 0.2};
    std::vector<double> weight_decays = {1e-4, 1e-3};
    std::vector<double> method_values = {0.1, 0.3, 0.5, 0.7, 0.9};
    NoiseSetting stage1_noise;
    std::vector<NoiseSetting> noise_settings = {NoiseSetting{}};

    static SweepGrid from_key_values(const KeyValues& kv);
    void validate() const;
};

}  // namespace nll

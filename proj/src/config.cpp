#include "nll/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace nll {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

double to_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError(key, "expected a number, got '" + text + "'");
    return v;
}

long long to_int(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError(key, "expected an integer, got '" + text + "'");
    return v;
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename Fn>
auto rethrow_as_config(const std::string& key, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const DomainError& e) {
        throw ConfigError(key, e.what());
    }
}

}  // namespace

const std::vector<std::string>& KeyValues::known_keys() {
    static const std::vector<std::string> keys = {
        "data.classes",      "data.per_class",   "data.test_per_class", "data.dim",
        "data.separation",   "data.sigma",       "data.seed",           "data.csv",
        "data.test_csv",     "noise.kind",       "noise.rate",          "noise.map",
        "noise.groups",      "loss.kind",        "loss.noisy_kind",     "loss.pi",
        "loss.q",            "loss.alpha",       "loss.beta",           "loss.A",
        "loss.epsilon",      "train.lr",         "train.weight_decay",  "train.momentum",
        "train.epochs",      "train.batch_size", "train.milestones",    "train.lr_decay",
        "train.seed",        "train.hidden",     "train.identical_views", "augment.strength",
        "augment.jitter",    "augment.scale_lo", "augment.scale_hi",    "validation_fraction",
        "metrics.stride",    "output",           "sweep.lrs",           "sweep.wds",
        "sweep.method_values", "sweep.noise_settings", "sweep.stage1_noise",
    };
    return keys;
}

void KeyValues::set(const std::string& key, const std::string& value) {
    const auto& known = known_keys();
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError(key, "unknown key");
    values_[key] = value;
}

void KeyValues::merge(const KeyValues& overrides) {
    for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

KeyValues KeyValues::parse(std::istream& in) {
    KeyValues kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(t, "line " + std::to_string(line_no) + " is not of the form key = value");
        kv.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    }
    return kv;
}

KeyValues KeyValues::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    return parse(in);
}

KeyValues KeyValues::parse_string(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse(in);
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    return v ? to_double(key, *v) : fallback;
}

long long KeyValues::get_int(const std::string& key, long long fallback) const {
    const auto v = get(key);
    return v ? to_int(key, *v) : fallback;
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    const std::string t = trim(*v);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError(key, "expected an unsigned integer, got '" + *v + "'");
    return out;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    std::string t = trim(*v);
    for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(key, "expected a boolean, got '" + *v + "'");
}

std::vector<double> KeyValues::get_doubles(const std::string& key, std::vector<double> fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(*v)) out.push_back(to_double(key, item));
    return out;
}

std::string KeyValues::get_string(const std::string& key, std::string fallback) const {
    const auto v = get(key);
    return v ? *v : fallback;
}

std::vector<LossSpec> ExperimentConfig::losses() const {
    if (noisy_loss) return {loss, *noisy_loss};
    return {loss};
}

void ExperimentConfig::sync_views() {
    int v = loss.views();
    if (noisy_loss) v = std::max(v, noisy_loss->views());
    train.views_per_example = v;
}

void ExperimentConfig::validate() const {
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ConfigError("validation_fraction", "must lie in (0, 1)");
    if (metrics_stride <= 0) throw ConfigError("metrics.stride", "must be positive");
    if (hidden.empty()) throw ConfigError("train.hidden", "need at least one hidden layer");
    auto loss_key = [](const LossSpec& spec) {
        const auto name = spec.primary_param_name();
        return name.empty() ? std::string("loss.kind") : "loss." + std::string(name);
    };
    rethrow_as_config(loss_key(loss), [&] { loss.validate(); });
    if (noisy_loss) rethrow_as_config(loss_key(*noisy_loss), [&] { noisy_loss->validate(); });
    const auto all = losses();
    rethrow_as_config("train", [&] { train.validate(all); });
    rethrow_as_config("augment", [&] { augment_spec({}).validate(); });
    if (data.csv_path.empty()) {
        if (data.classes < 2) throw ConfigError("data.classes", "need at least 2 classes");
        if (data.dim < 2) throw ConfigError("data.dim", "need dim >= 2");
        if (!(data.sigma > 0.0)) throw ConfigError("data.sigma", "must be positive");
        if (data.per_class < 2) throw ConfigError("data.per_class", "need at least 2 per class");
        if (data.test_per_class < 1) throw ConfigError("data.test_per_class", "need at least 1 per class");
    }
    if (!(noise.rate >= 0.0 && noise.rate <= 1.0)) throw ConfigError("noise.rate", "must lie in [0, 1]");
}

AugmentSpec ExperimentConfig::augment_spec(std::vector<double> feature_std) const {
    AugmentSpec spec = AugmentSpec::from_strength(augment_strength, std::move(feature_std));
    if (augment_jitter) spec.jitter = *augment_jitter;
    if (augment_scale_lo) spec.scale_lo = *augment_scale_lo;
    if (augment_scale_hi) spec.scale_hi = *augment_scale_hi;
    return spec;
}

ExperimentConfig ExperimentConfig::from_key_values(const KeyValues& kv) {
    ExperimentConfig c;
    auto size_key = [&](const char* key, std::size_t fallback) {
        const long long v = kv.get_int(key, static_cast<long long>(fallback));
        if (v < 0) throw ConfigError(key, "must be nonnegative");
        return static_cast<std::size_t>(v);
    };
    c.data.classes = size_key("data.classes", c.data.classes);
    c.data.per_class = size_key("data.per_class", c.data.per_class);
    c.data.test_per_class = size_key("data.test_per_class", c.data.test_per_class);
    c.data.dim = size_key("data.dim", c.data.dim);
    c.data.separation = kv.get_double("data.separation", c.data.separation);
    c.data.sigma = kv.get_double("data.sigma", c.data.sigma);
    c.data.seed = kv.get_u64("data.seed", c.data.seed);
    c.data.csv_path = kv.get_string("data.csv", "");
    c.data.test_csv_path = kv.get_string("data.test_csv", "");

    if (auto v = kv.get("noise.kind")) c.noise.kind = rethrow_as_config("noise.kind", [&] { return parse_noise_kind(*v); });
    c.noise.rate = kv.get_double("noise.rate", 0.0);
    if (auto v = kv.get("noise.map")) c.noise.class_map = rethrow_as_config("noise.map", [&] { return parse_class_map(*v); });
    if (auto v = kv.get("noise.groups")) c.noise.groups = rethrow_as_config("noise.groups", [&] { return parse_groups(*v); });

    if (auto v = kv.get("loss.kind")) c.loss.kind = rethrow_as_config("loss.kind", [&] { return parse_loss_kind(*v); });
    auto apply_params = [&](LossSpec& spec) {
        spec.pi = kv.get_double("loss.pi", spec.pi);
        spec.q = kv.get_double("loss.q", spec.q);
        spec.alpha = kv.get_double("loss.alpha", spec.alpha);
        spec.beta = kv.get_double("loss.beta", spec.kind == LossKind::BOOTSTRAP_SOFT ? 0.8 : spec.beta);
        spec.A = kv.get_double("loss.A", spec.A);
        spec.epsilon = kv.get_double("loss.epsilon", spec.epsilon);
    };
    apply_params(c.loss);
    if (auto v = kv.get("loss.noisy_kind")) {
        LossSpec noisy;
        noisy.kind = rethrow_as_config("loss.noisy_kind", [&] { return parse_loss_kind(*v); });
        apply_params(noisy);
        c.noisy_loss = noisy;
    }

    c.train.learning_rate = kv.get_double("train.lr", c.train.learning_rate);
    c.train.weight_decay = kv.get_double("train.weight_decay", c.train.weight_decay);
    c.train.momentum = kv.get_double("train.momentum", c.train.momentum);
    c.train.epochs = static_cast<int>(kv.get_int("train.epochs", c.train.epochs));
    c.train.batch_size = static_cast<int>(kv.get_int("train.batch_size", c.train.batch_size));
    c.train.milestones = kv.get_doubles("train.milestones", c.train.milestones);
    c.train.lr_decay_factor = kv.get_double("train.lr_decay", c.train.lr_decay_factor);
    c.train.seed = kv.get_u64("train.seed", c.train.seed);
    c.train.identical_views = kv.get_bool("train.identical_views", false);
    if (auto v = kv.get("train.hidden")) {
        c.hidden.clear();
        for (double h : kv.get_doubles("train.hidden", {})) {
            if (!(h >= 1.0) || h != static_cast<double>(static_cast<std::size_t>(h)))
                throw ConfigError("train.hidden", "layer sizes must be positive integers");
            c.hidden.push_back(static_cast<std::size_t>(h));
        }
    }
    c.noise.seed = c.train.seed;

    if (auto v = kv.get("augment.strength"))
        c.augment_strength = rethrow_as_config("augment.strength", [&] { return parse_augment_strength(*v); });
    if (kv.has("augment.jitter")) c.augment_jitter = kv.get_double("augment.jitter", 0.0);
    if (kv.has("augment.scale_lo")) c.augment_scale_lo = kv.get_double("augment.scale_lo", 1.0);
    if (kv.has("augment.scale_hi")) c.augment_scale_hi = kv.get_double("augment.scale_hi", 1.0);

    c.validation_fraction = kv.get_double("validation_fraction", c.validation_fraction);
    c.metrics_stride = static_cast<int>(kv.get_int("metrics.stride", c.metrics_stride));
    c.output = kv.get_string("output", "");
    c.sync_views();
    c.validate();
    return c;
}

std::string NoiseSetting::describe() const {
    std::string s(to_string(kind));
    for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return s + ":" + format_double(rate);
}

std::vector<NoiseSetting> parse_noise_settings(std::string_view text) {
    std::vector<NoiseSetting> out;
    for (const auto& item : split_list(text)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw DomainError("noise setting '" + item + "' must look like kind:rate");
        NoiseSetting s;
        s.kind = parse_noise_kind(item.substr(0, colon));
        s.rate = to_double("noise setting", item.substr(colon + 1));
        if (!(s.rate >= 0.0 && s.rate <= 1.0)) throw DomainError("noise setting rate must lie in [0, 1]");
        out.push_back(s);
    }
    return out;
}

SweepGrid SweepGrid::from_key_values(const KeyValues& kv) {
    SweepGrid g;
    g.learning_rates = kv.get_doubles("sweep.lrs", g.learning_rates);
    g.weight_decays = kv.get_doubles("sweep.wds", g.weight_decays);
    g.method_values = kv.get_doubles("sweep.method_values", g.method_values);
    if (auto v = kv.get("sweep.stage1_noise")) {
        const auto s = rethrow_as_config("sweep.stage1_noise", [&] { return parse_noise_settings(*v); });
        if (s.size() != 1) throw ConfigError("sweep.stage1_noise", "expected exactly one kind:rate");
        g.stage1_noise = s.front();
    }
    if (auto v = kv.get("sweep.noise_settings"))
        g.noise_settings = rethrow_as_config("sweep.noise_settings", [&] { return parse_noise_settings(*v); });
    rethrow_as_config("sweep", [&] { g.validate(); });
    return g;
}

void SweepGrid::validate() const {
    if (learning_rates.empty()) throw DomainError("sweep learning-rate grid is empty");
    if (weight_decays.empty()) throw DomainError("sweep weight-decay grid is empty");
    if (method_values.empty()) throw DomainError("sweep method grid is empty");
    if (noise_settings.empty()) throw DomainError("sweep has no noise settings");
}

}  // namespace nll

#include "nll/noise.hpp"

#include "nll/csv.hpp"
#include "nll/divergences.hpp"
#include "nll/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace nll {

namespace {

void require_rate(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("noise rate must lie in [0, 1], got " + std::to_string(eta));
}

void require_classes(std::size_t k) {
    if (k < 2) throw DomainError("need at least 2 classes");
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

int parse_int(std::string_view text) {
    const std::string t = trim(text);
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(t, &used);
    } catch (const std::exception&) {
        throw DomainError("expected an integer, got '" + t + "'");
    }
    if (used != t.size()) throw DomainError("expected an integer, got '" + t + "'");
    return v;
}

}  // namespace

std::string_view to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::SYMMETRIC: return "SYMMETRIC";
        case NoiseKind::ASYMMETRIC_MAP: return "ASYMMETRIC_MAP";
        case NoiseKind::ASYMMETRIC_CYCLE: return "ASYMMETRIC_CYCLE";
    }
    return "?";
}

NoiseKind parse_noise_kind(std::string_view name) {
    std::string s(name);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    std::replace(s.begin(), s.end(), '-', '_');
    if (s == "SYMMETRIC" || s == "SYM") return NoiseKind::SYMMETRIC;
    if (s == "ASYMMETRIC_MAP" || s == "ASYM_MAP" || s == "MAP") return NoiseKind::ASYMMETRIC_MAP;
    if (s == "ASYMMETRIC_CYCLE" || s == "ASYM_CYCLE" || s == "CYCLE") return NoiseKind::ASYMMETRIC_CYCLE;
    throw DomainError("unknown noise kind '" + std::string(name) + "'");
}

TransitionMatrix::TransitionMatrix(std::size_t num_classes) : k_(num_classes), m_(num_classes * num_classes, 0.0) {
    require_classes(num_classes);
}

TransitionMatrix::TransitionMatrix(std::size_t num_classes, std::vector<double> row_major)
    : k_(num_classes), m_(std::move(row_major)) {
    require_classes(num_classes);
    if (m_.size() != k_ * k_) throw DomainError("transition matrix needs K*K entries");
    validate();
}

TransitionMatrix TransitionMatrix::identity(std::size_t num_classes) {
    return symmetric_transition(num_classes, 0.0);
}

void TransitionMatrix::validate() const {
    for (std::size_t i = 0; i < k_; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < k_; ++j) {
            const double v = at(i, j);
            if (!(v >= 0.0 && v <= 1.0)) throw DomainError("transition entry outside [0, 1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw DomainError("transition row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
}

TransitionMatrix NoiseSpec::transition(std::size_t num_classes) const {
    switch (kind) {
        case NoiseKind::SYMMETRIC: return symmetric_transition(num_classes, rate);
        case NoiseKind::ASYMMETRIC_MAP: return asymmetric_map_transition(num_classes, rate, class_map);
        case NoiseKind::ASYMMETRIC_CYCLE: return asymmetric_cycle_transition(num_classes, rate, groups);
    }
    throw DomainError("unknown noise kind");
}

TransitionMatrix symmetric_transition(std::size_t num_classes, double eta) {
    require_classes(num_classes);
    require_rate(eta);
    TransitionMatrix t(num_classes);
    const double off = eta / static_cast<double>(num_classes);
    for (std::size_t i = 0; i < num_classes; ++i)
        for (std::size_t j = 0; j < num_classes; ++j) t.mut(i, j) = off;
    // Diagonal as the complement keeps every row sum exact.
    for (std::size_t i = 0; i < num_classes; ++i)
        t.mut(i, i) = 1.0 - off * static_cast<double>(num_classes - 1);
    return t;
}

TransitionMatrix asymmetric_map_transition(std::size_t num_classes, double eta, const std::map<int, int>& class_map) {
    require_classes(num_classes);
    require_rate(eta);
    TransitionMatrix t(num_classes);
    for (std::size_t i = 0; i < num_classes; ++i) t.mut(i, i) = 1.0;
    const auto k = static_cast<int>(num_classes);
    for (const auto& [from, to] : class_map) {
        if (from < 0 || from >= k || to < 0 || to >= k)
            throw DomainError("class map entry " + std::to_string(from) + "->" + std::to_string(to) + " out of range");
        if (from == to) throw DomainError("class map self-map " + std::to_string(from) + "->" + std::to_string(to));
        const auto f = static_cast<std::size_t>(from);
        t.mut(f, f) = 1.0 - eta;
        t.mut(f, static_cast<std::size_t>(to)) = eta;
    }
    return t;
}

TransitionMatrix asymmetric_cycle_transition(std::size_t num_classes, double eta,
                                             const std::vector<std::vector<int>>& groups) {
    require_classes(num_classes);
    require_rate(eta);
    std::vector<int> seen(num_classes, 0);
    for (const auto& g : groups) {
        if (g.size() < 2) throw DomainError("cycle noise groups need at least 2 classes");
        for (int c : g) {
            if (c < 0 || c >= static_cast<int>(num_classes)) throw DomainError("cycle group class out of range");
            if (seen[static_cast<std::size_t>(c)]++) throw DomainError("class " + std::to_string(c) + " in two groups");
        }
    }
    if (std::count(seen.begin(), seen.end(), 0) != 0) throw DomainError("cycle groups do not cover every class");
    TransitionMatrix t(num_classes);
    for (const auto& g : groups)
        for (std::size_t s = 0; s < g.size(); ++s) {
            const auto c = static_cast<std::size_t>(g[s]);
            const auto next = static_cast<std::size_t>(g[(s + 1) % g.size()]);
            t.mut(c, c) = 1.0 - eta;
            t.mut(c, next) = eta;
        }
    return t;
}

NoisyLabels inject_noise(std::span<const int> clean_labels, const TransitionMatrix& T, std::uint64_t seed) {
    Rng rng(derive_seed(seed, {stream::kNoise}));
    NoisyLabels out;
    out.observed.resize(clean_labels.size());
    out.is_noisy.resize(clean_labels.size());
    const auto k = T.size();
    for (std::size_t n = 0; n < clean_labels.size(); ++n) {
        const int truth = clean_labels[n];
        if (truth < 0 || static_cast<std::size_t>(truth) >= k) throw DomainError("inject_noise: label out of range");
        const auto row = T.row(static_cast<std::size_t>(truth));
        const double u = uniform01(rng);
        double acc = 0.0;
        std::size_t pick = k;
        for (std::size_t j = 0; j < k; ++j) {
            acc += row[j];
            if (u < acc) {
                pick = j;
                break;
            }
        }
        if (pick == k) {
            // u landed in the rounding gap above the cumulative sum: take the
            // last class with positive probability.
            pick = k - 1;
            while (pick > 0 && row[pick] == 0.0) --pick;
        }
        out.observed[n] = static_cast<int>(pick);
        out.is_noisy[n] = out.observed[n] != truth ? 1 : 0;
    }
    return out;
}

void inject_noise(NoisyDataset& data, const TransitionMatrix& T, std::uint64_t seed) {
    if (T.size() != data.num_classes) throw DomainError("transition matrix size does not match class count");
    if (!data.has_true_labels()) data.true_labels = data.observed;
    auto noisy = inject_noise(data.true_labels, T, seed);
    data.observed = std::move(noisy.observed);
    data.is_noisy = std::move(noisy.is_noisy);
}

NoiseStats noise_stats(const NoisyDataset& data) {
    NoiseStats s;
    s.total = data.size();
    s.per_class_total.assign(data.num_classes, 0);
    s.per_class_flipped.assign(data.num_classes, 0);
    s.per_class.assign(data.num_classes, 0.0);
    if (!data.has_true_labels()) throw DomainError("noise_stats needs true labels");
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto t = static_cast<std::size_t>(data.true_labels[i]);
        ++s.per_class_total[t];
        if (data.observed[i] != data.true_labels[i]) {
            ++s.flipped;
            ++s.per_class_flipped[t];
        }
    }
    s.overall = s.total ? static_cast<double>(s.flipped) / static_cast<double>(s.total) : 0.0;
    for (std::size_t c = 0; c < data.num_classes; ++c)
        s.per_class[c] = s.per_class_total[c]
                             ? static_cast<double>(s.per_class_flipped[c]) / static_cast<double>(s.per_class_total[c])
                             : 0.0;
    return s;
}

void write_transition_csv(std::ostream& out, const TransitionMatrix& T) {
    for (std::size_t i = 0; i < T.size(); ++i) {
        for (std::size_t j = 0; j < T.size(); ++j) {
            if (j) out << ',';
            out << format_double(T.at(i, j));
        }
        out << '\n';
    }
}

TransitionMatrix read_transition_csv(std::istream& in) {
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0, k = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (k == 0) k = fields.size();
        if (fields.size() != k) throw CsvError(line_no, "ragged transition matrix row");
        for (const auto& f : fields) values.push_back(parse_csv_double(f, line_no));
    }
    if (values.size() != k * k) throw CsvError(line_no, "transition matrix is not square");
    return TransitionMatrix(k, std::move(values));
}

std::map<int, int> parse_class_map(std::string_view text) {
    std::map<int, int> out;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw DomainError("class map entry '" + item + "' must look like from:to");
        const int from = parse_int(std::string_view(item).substr(0, colon));
        const int to = parse_int(std::string_view(item).substr(colon + 1));
        if (!out.emplace(from, to).second) throw DomainError("class " + std::to_string(from) + " mapped twice");
    }
    return out;
}

std::vector<std::vector<int>> parse_groups(std::string_view text) {
    std::vector<std::vector<int>> out;
    std::stringstream ss{std::string(text)};
    std::string group;
    while (std::getline(ss, group, ';')) {
        std::stringstream gs(group);
        std::string tok;
        std::vector<int> g;
        while (gs >> tok) g.push_back(parse_int(tok));
        if (!g.empty()) out.push_back(std::move(g));
    }
    return out;
}

std::vector<std::vector<int>> consecutive_groups(std::size_t num_classes, std::size_t size) {
    if (size < 2 || num_classes % size != 0)
        throw DomainError("consecutive_groups: group size must be >= 2 and divide the class count");
    std::vector<std::vector<int>> out;
    for (std::size_t start = 0; start < num_classes; start += size) {
        std::vector<int> g;
        for (std::size_t c = start; c < start + size; ++c) g.push_back(static_cast<int>(c));
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace nll

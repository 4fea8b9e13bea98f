#include "nll/dataset.hpp"

#include "nll/csv.hpp"
#include "nll/divergences.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nll {

std::vector<std::string> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.emplace_back(line.substr(start));
            break;
        }
        fields.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

double parse_csv_double(std::string_view field, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
        throw CsvError(line, "expected a number, got '" + std::string(field) + "'");
    return v;
}

long long parse_csv_int(std::string_view field, std::size_t line) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
        throw CsvError(line, "expected an integer, got '" + std::string(field) + "'");
    return v;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void NoisyDataset::refresh_flags() {
    if (true_labels.empty()) {
        is_noisy.clear();
        return;
    }
    is_noisy.resize(observed.size());
    for (std::size_t i = 0; i < observed.size(); ++i)
        is_noisy[i] = observed[i] != true_labels[i] ? 1 : 0;
}

void NoisyDataset::validate() const {
    if (features.size() != observed.size() * dim)
        throw DomainError("dataset feature buffer does not match size x dim");
    if (!true_labels.empty() && true_labels.size() != observed.size())
        throw DomainError("dataset true_labels length mismatch");
    if (!is_noisy.empty() && is_noisy.size() != observed.size())
        throw DomainError("dataset is_noisy length mismatch");
    const auto k = static_cast<int>(num_classes);
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (observed[i] < 0 || observed[i] >= k) throw DomainError("observed label out of range");
        if (!true_labels.empty()) {
            if (true_labels[i] < 0 || true_labels[i] >= k)
                throw DomainError("true label out of range");
            if (!is_noisy.empty() && (is_noisy[i] != 0) != (observed[i] != true_labels[i]))
                throw DomainError("is_noisy flag disagrees with labels at example " +
                                  std::to_string(i));
        }
    }
}

NoisyDataset NoisyDataset::select(std::span<const std::size_t> indices) const {
    NoisyDataset out;
    out.dim = dim;
    out.num_classes = num_classes;
    out.features.reserve(indices.size() * dim);
    out.observed.reserve(indices.size());
    for (std::size_t idx : indices) {
        const auto x = example(idx);
        out.features.insert(out.features.end(), x.begin(), x.end());
        out.observed.push_back(observed[idx]);
        if (!true_labels.empty()) out.true_labels.push_back(true_labels[idx]);
        if (!is_noisy.empty()) out.is_noisy.push_back(is_noisy[idx]);
    }
    return out;
}

NoisyDataset NoisyDataset::clean_copy() const {
    if (true_labels.empty()) throw DomainError("clean_copy needs true labels");
    NoisyDataset out = *this;
    out.observed = true_labels;
    out.refresh_flags();
    return out;
}

std::vector<double> NoisyDataset::feature_std() const {
    std::vector<double> mean(dim, 0.0), var(dim, 0.0);
    const std::size_t n = size();
    if (n == 0) return std::vector<double>(dim, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += features[i * dim + j];
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = features[i * dim + j] - mean[j];
            var[j] += d * d;
        }
    for (double& v : var) v = std::sqrt(v / static_cast<double>(n));
    return var;
}

void write_dataset_csv(std::ostream& out, const NoisyDataset& data) {
    for (std::size_t j = 0; j < data.dim; ++j) out << "feat_" << j << ',';
    out << "observed_label,true_label,is_noisy\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.example(i)) out << format_double(v) << ',';
        out << data.observed[i] << ',';
        if (data.has_true_labels()) {
            out << data.true_labels[i] << ',' << (data.observed[i] != data.true_labels[i] ? 1 : 0);
        } else {
            out << ",0";
        }
        out << '\n';
    }
}

void write_dataset_csv(const std::string& path, const NoisyDataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_dataset_csv(out, data);
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

NoisyDataset read_dataset_csv(std::istream& in, std::size_t num_classes) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw CsvError(1, "missing header");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[header.size() - 3] != "observed_label" ||
        header[header.size() - 2] != "true_label" || header.back() != "is_noisy")
        throw CsvError(1, "header must end with observed_label,true_label,is_noisy");
    NoisyDataset data;
    data.dim = header.size() - 3;
    for (std::size_t j = 0; j < data.dim; ++j)
        if (header[j] != "feat_" + std::to_string(j))
            throw CsvError(1, "unexpected feature column '" + header[j] + "'");

    bool any_true = false, any_missing = false;
    int max_label = -1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw CsvError(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
        for (std::size_t j = 0; j < data.dim; ++j)
            data.features.push_back(parse_csv_double(fields[j], line_no));
        const auto obs = parse_csv_int(fields[data.dim], line_no);
        if (obs < 0) throw CsvError(line_no, "negative label");
        data.observed.push_back(static_cast<int>(obs));
        max_label = std::max(max_label, static_cast<int>(obs));
        if (fields[data.dim + 1].empty()) {
            any_missing = true;
        } else {
            const auto t = parse_csv_int(fields[data.dim + 1], line_no);
            if (t < 0) throw CsvError(line_no, "negative label");
            data.true_labels.push_back(static_cast<int>(t));
            max_label = std::max(max_label, static_cast<int>(t));
            any_true = true;
            const auto flag = parse_csv_int(fields[data.dim + 2], line_no);
            if (flag != (t != obs ? 1 : 0))
                throw CsvError(line_no, "is_noisy flag disagrees with labels");
        }
    }
    if (any_true && any_missing) throw CsvError(line_no, "true_label present on only some rows");
    data.num_classes = num_classes ? num_classes : static_cast<std::size_t>(std::max(max_label + 1, 2));
    data.refresh_flags();
    data.validate();
    return data;
}

NoisyDataset read_dataset_csv(const std::string& path, std::size_t num_classes) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_dataset_csv(in, num_classes);
}

}  // namespace nll

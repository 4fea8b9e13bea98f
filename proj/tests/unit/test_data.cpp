#include "doctest.h"

#include "nll/csv.hpp"
#include "nll/dataset.hpp"
#include "nll/divergences.hpp"
#include "nll/synthetic.hpp"

#include <algorithm>
#include <sstream>

using namespace nll;

TEST_CASE("dataset CSV roundtrip") {
    auto d = generate_synthetic(3, 4, 2, 2.0, 1.0, 5);
    d.observed[0] = (d.observed[0] + 1) % 3;
    d.refresh_flags();
    std::stringstream s;
    write_dataset_csv(s, d);
    const std::string text = s.str();
    CHECK(text.rfind("feat_0,feat_1,observed_label,true_label,is_noisy\n", 0) == 0);
    const auto r = read_dataset_csv(s);
    CHECK(r.features == d.features);
    CHECK(r.observed == d.observed);
    CHECK(r.true_labels == d.true_labels);
    CHECK(r.is_noisy == d.is_noisy);
    CHECK(r.num_classes == 3);
}

TEST_CASE("dataset CSV errors carry line numbers") {
    std::stringstream bad_flag("feat_0,observed_label,true_label,is_noisy\n0.5,1,1,0\n0.2,0,1,0\n");
    try {
        read_dataset_csv(bad_flag);
        FAIL("expected CsvError");
    } catch (const CsvError& e) {
        CHECK(e.line() == 3);
    }
    std::stringstream bad_num("feat_0,observed_label,true_label,is_noisy\nabc,1,1,0\n");
    CHECK_THROWS_AS(read_dataset_csv(bad_num), CsvError);
    std::stringstream unknown("feat_0,observed_label,true_label,is_noisy\n0.5,1,,\n");
    const auto d = read_dataset_csv(unknown);
    CHECK_FALSE(d.has_true_labels());
}

TEST_CASE("synthetic generation is seeded and class-major") {
    const auto a = generate_synthetic(4, 10, 8, 3.0, 1.0, 9);
    const auto b = generate_synthetic(4, 10, 8, 3.0, 1.0, 9);
    const auto c = generate_synthetic(4, 10, 8, 3.0, 1.0, 10);
    CHECK(a.features == b.features);
    CHECK(a.features != c.features);
    CHECK(a.size() == 40);
    CHECK(a.observed[9] == 0);
    CHECK(a.observed[10] == 1);
    CHECK(a.observed == a.true_labels);
    CHECK(std::all_of(a.is_noisy.begin(), a.is_noisy.end(), [](auto f) { return f == 0; }));
}

TEST_CASE("default mixture has Bayes accuracy near 0.95") {
    const auto mix = make_mixture(10, 16, 3.45, 1.0, 0);
    const auto sample = sample_mixture(mix, 2000, 1);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) hits += mix.bayes_classify(sample.example(i)) == sample.observed[i];
    const double acc = static_cast<double>(hits) / static_cast<double>(sample.size());
    CHECK(acc > 0.93);
    CHECK(acc < 0.97);
}

TEST_CASE("stratified split") {
    auto d = generate_synthetic(3, 20, 2, 2.0, 1.0, 1);
    d.observed[0] = 2;
    d.refresh_flags();
    const auto s = split(d, 0.1, 4);
    CHECK(s.train.size() + s.validation.size() == d.size());
    CHECK(s.validation.size() == 6);
    std::vector<int> per_class(3, 0);
    for (int l : s.validation.observed) ++per_class[l];
    CHECK(per_class == std::vector<int>{2, 2, 2});
    CHECK(s.validation.observed == s.validation.true_labels);

    const auto again = split(d, 0.1, 4);
    CHECK(again.train.features == s.train.features);
    const auto other = split(d, 0.1, 5);
    CHECK(other.validation.features != s.validation.features);

    CHECK_THROWS_AS(split(generate_synthetic(2, 1, 2, 2.0, 1.0, 0), 0.5, 0), DomainError);
    CHECK_THROWS_AS(split(d, 1.0, 0), DomainError);
}

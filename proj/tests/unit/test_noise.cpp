#include "doctest.h"

#include "nll/divergences.hpp"
#include "nll/noise.hpp"

#include <cmath>
#include <sstream>

using namespace nll;

TEST_CASE("symmetric transition matrices") {
    const auto t = symmetric_transition(10, 0.4);
    CHECK(std::abs(t.at(0, 0) - 0.64) < 1e-12);
    CHECK(std::abs(t.at(0, 1) - 0.04) < 1e-12);
    const auto id = symmetric_transition(4, 0.0);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(id.at(i, j) == (i == j ? 1.0 : 0.0));
    const auto u = symmetric_transition(5, 1.0);
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(u.at(2, j) - 0.2) < 1e-12);
    CHECK_THROWS_AS(symmetric_transition(10, 1.5), DomainError);
    CHECK_THROWS_AS(symmetric_transition(1, 0.2), DomainError);
}

TEST_CASE("asymmetric transition matrices") {
    const auto m = asymmetric_map_transition(10, 0.4, parse_class_map("9:1,2:0,3:5,5:3,4:7"));
    CHECK(m.at(9, 9) == doctest::Approx(0.6));
    CHECK(m.at(9, 1) == doctest::Approx(0.4));
    CHECK(m.at(0, 0) == 1.0);
    CHECK(m.at(3, 5) == doctest::Approx(0.4));
    CHECK_THROWS_AS(asymmetric_map_transition(10, 0.4, {{2, 2}}), DomainError);

    const auto c = asymmetric_cycle_transition(6, 0.3, parse_groups("0 1 2;3 4 5"));
    CHECK(c.at(0, 1) == doctest::Approx(0.3));
    CHECK(c.at(2, 0) == doctest::Approx(0.3));
    CHECK(c.at(5, 3) == doctest::Approx(0.3));
    CHECK(c.at(4, 4) == doctest::Approx(0.7));
    CHECK_THROWS_AS(asymmetric_cycle_transition(4, 0.3, {{0, 1, 2}, {3}}), DomainError);
    CHECK_THROWS_AS(asymmetric_cycle_transition(4, 0.3, {{0, 1}}), DomainError);

    const auto groups = consecutive_groups(100, 5);
    CHECK(groups.size() == 20);
    CHECK(groups[3] == std::vector<int>{15, 16, 17, 18, 19});
    CHECK_THROWS_AS(parse_class_map("1-2"), DomainError);
}

TEST_CASE("transition matrix validation and CSV roundtrip") {
    CHECK_THROWS_AS(TransitionMatrix(2, {0.5, 0.4, 0.0, 1.0}), DomainError);
    CHECK_THROWS_AS(TransitionMatrix(2, {1.1, -0.1, 0.0, 1.0}), DomainError);
    const auto t = symmetric_transition(3, 0.3);
    std::stringstream s;
    write_transition_csv(s, t);
    const auto r = read_transition_csv(s);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(r.at(i, j) == t.at(i, j));
}

TEST_CASE("symmetric injection statistics") {
    const std::size_t n = 100000;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 10);
    const auto noisy = inject_noise(labels, symmetric_transition(10, 0.4), 7);
    std::size_t flipped = 0;
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(noisy.is_noisy[i] == (noisy.observed[i] != labels[i]));
        flipped += noisy.is_noisy[i];
    }
    CHECK(std::abs(static_cast<double>(flipped) / n - 0.36) < 0.01);

    const auto again = inject_noise(labels, symmetric_transition(10, 0.4), 7);
    CHECK(again.observed == noisy.observed);

    const auto all = inject_noise(labels, symmetric_transition(10, 1.0), 8);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i) kept += !all.is_noisy[i];
    CHECK(std::abs(static_cast<double>(kept) / n - 0.1) < 0.01);

    const auto none = inject_noise(labels, symmetric_transition(10, 0.0), 8);
    CHECK(none.observed == labels);
}

TEST_CASE("asymmetric injection follows the matrix rows") {
    const std::size_t n = 100000;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 10);
    const auto t = asymmetric_map_transition(10, 0.4, parse_class_map("9:1,2:0,3:5,5:3,4:7"));
    const auto noisy = inject_noise(labels, t, 3);
    std::vector<std::vector<double>> freq(10, std::vector<double>(10, 0.0));
    for (std::size_t i = 0; i < n; ++i) freq[labels[i]][noisy.observed[i]] += 1.0;
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j) CHECK(std::abs(freq[i][j] / (n / 10.0) - t.at(i, j)) < 0.01);
}

TEST_CASE("noise_stats on a dataset") {
    NoisyDataset d;
    d.dim = 1;
    d.num_classes = 3;
    d.features = {0, 0, 0, 0};
    d.true_labels = {0, 1, 2, 2};
    d.observed = {0, 2, 2, 1};
    d.refresh_flags();
    const auto s = noise_stats(d);
    CHECK(s.total == 4);
    CHECK(s.flipped == 2);
    CHECK(s.overall == 0.5);
    CHECK(s.per_class[0] == 0.0);
    CHECK(s.per_class[1] == 1.0);
    CHECK(s.per_class[2] == 0.5);

    NoisyDataset clean = d.clean_copy();
    inject_noise(clean, symmetric_transition(3, 0.0), 1);
    CHECK(clean.observed == clean.true_labels);
}

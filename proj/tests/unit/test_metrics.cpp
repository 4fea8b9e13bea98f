#include "doctest.h"

#include "nll/metrics.hpp"
#include "nll/synthetic.hpp"

using namespace nll;

namespace {

// One linear layer on a scalar input: class 1 iff x > 1.5.
MlpParams threshold_net() {
    MlpParams p;
    DenseLayer l;
    l.weight.resize(2, 1);
    l.weight << 0.0, 1.0;
    l.bias.resize(2);
    l.bias << 0.0, -1.5;
    p.layers = {l};
    return p;
}

NoisyDataset scalar_data(std::vector<double> xs, std::vector<int> observed, std::vector<int> truth) {
    NoisyDataset d;
    d.dim = 1;
    d.num_classes = 2;
    d.features = std::move(xs);
    d.observed = std::move(observed);
    d.true_labels = std::move(truth);
    d.refresh_flags();
    return d;
}

// Pure scaling by a factor in [2, 3].
AugmentSpec doubling() {
    AugmentSpec a;
    a.strength = AugmentStrength::FULL;
    a.jitter = 0.0;
    a.scale_lo = 2.0;
    a.scale_hi = 3.0;
    return a;
}

}  // namespace

TEST_CASE("toy consistency is exactly 0.75") {
    // x = 1 moves past the threshold once scaled; the other three stay put.
    const auto d = scalar_data({1.0, 2.0, -1.0, 0.1}, {0, 1, 0, 0}, {0, 1, 0, 0});
    const auto net = threshold_net();
    CHECK(consistency(net, d, doubling(), 3) == 0.75);
    const auto m = consistency_matches(net, d, doubling(), 3);
    CHECK(m == std::vector<std::uint8_t>{0, 1, 1, 1});
    CHECK(consistency(net, d, AugmentSpec{}, 3) == 1.0);
}

TEST_CASE("subset consistency partitions the overall value") {
    // Examples 0 and 3 carry wrong labels.
    const auto d = scalar_data({1.0, 2.0, -1.0, 0.1, 1.2, 5.0}, {1, 1, 0, 1, 0, 1}, {0, 1, 0, 0, 0, 1});
    const auto net = threshold_net();
    const auto s = subset_consistency(net, d, doubling(), 8);
    REQUIRE(s.n_noisy == 2);
    REQUIRE(s.n_clean == 4);
    CHECK(*s.noisy == 0.5);
    CHECK(*s.clean == 0.75);  // 1.2 crosses the threshold
    const double all = consistency(net, d, doubling(), 8);
    CHECK(all == doctest::Approx((4 * *s.clean + 2 * *s.noisy) / 6.0));

    const auto clean_only = scalar_data({2.0, -1.0}, {1, 0}, {1, 0});
    const auto sc = subset_consistency(net, clean_only, doubling(), 1);
    CHECK_FALSE(sc.noisy.has_value());
    CHECK(*sc.clean == 1.0);
}

TEST_CASE("filtering before measuring gives the same per-example outcome") {
    const auto data = generate_synthetic(4, 50, 6, 2.0, 1.0, 3);
    const std::size_t sizes[] = {6, 10, 4};
    const auto net = init_params(sizes, 7);
    const auto aug = AugmentSpec::from_strength(AugmentStrength::FULL, data.feature_std());
    const auto full = consistency_matches(net, data, aug, 21);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); i += 3) idx.push_back(i);
    const auto sub = consistency_matches(net, data.select(idx), aug, 21);
    for (std::size_t j = 0; j < idx.size(); ++j) CHECK(sub[j] == full[idx[j]]);
    CHECK(consistency(net, data, aug, 21) == consistency(net, data, aug, 21));
}

TEST_CASE("accuracy and subset accuracy") {
    const auto d = scalar_data({1.0, 2.0, -1.0, 0.1}, {1, 1, 0, 0}, {0, 1, 0, 0});
    const auto net = threshold_net();
    const auto copy = d;
    CHECK(accuracy(net, d, LabelField::OBSERVED) == 0.75);
    CHECK(accuracy(net, d, LabelField::TRUE) == 1.0);
    const auto sub = subset_accuracy(net, d);
    CHECK(*sub.noisy == 0.0);
    CHECK(*sub.clean == 1.0);
    CHECK(d.observed == copy.observed);
    CHECK(d.features == copy.features);

    NoisyDataset unlabeled = d;
    unlabeled.true_labels.clear();
    unlabeled.is_noisy.clear();
    CHECK_THROWS_AS(accuracy(net, unlabeled, LabelField::TRUE), DomainError);
    CHECK_THROWS_AS(subset_consistency(net, unlabeled, doubling(), 0), DomainError);
}

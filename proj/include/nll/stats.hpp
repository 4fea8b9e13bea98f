#pragma once

#include <span>

namespace nll {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1)
};

MeanStd mean_std(std::span<const double> values);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_two_sided = 1.0;
    double p_greater = 0.5;  // H1: mean(a) > mean(b)
};

/// Welch's unequal-variance two-sample t-test. When both samples have zero
/// variance the result is degenerate: p = 1 for equal means, 0 otherwise.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Two-sided Welch p-value for per-seed final accuracies.
double significance_test(std::span<const double> a, std::span<const double> b);

}  // namespace nll

#include "nll/stats.hpp"

#include "nll/divergences.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>

namespace nll {

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) throw DomainError("mean_std of an empty sample");
    MeanStd out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) throw DomainError("welch_t_test needs at least 2 samples per group");
    const auto sa = mean_std(a);
    const auto sb = mean_std(b);
    const double va = sa.std * sa.std / static_cast<double>(a.size());
    const double vb = sb.std * sb.std / static_cast<double>(b.size());
    const double diff = sa.mean - sb.mean;
    WelchResult r;
    if (va + vb == 0.0) {
        if (diff == 0.0) return r;
        r.t = diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.df = static_cast<double>(a.size() + b.size() - 2);
        r.p_two_sided = 0.0;
        r.p_greater = diff > 0.0 ? 0.0 : 1.0;
        return r;
    }
    r.t = diff / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) /
           (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    const boost::math::students_t dist(r.df);
    r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
    r.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
    return r;
}

double significance_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DomainError("significance_test needs equal-length samples");
    return welch_t_test(a, b).p_two_sided;
}

}  // namespace nll

#include "nll/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>

namespace nll {

namespace {

void require_pi(double pi) {
    if (!(pi > 0.0 && pi < 1.0))
        throw DomainError("pi must lie in (0, 1), got " + std::to_string(pi));
}

void softmax_into(std::span<const double> z, std::span<double> p) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - zmax);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
}

double safe_log(double v) { return std::log(std::max(v, kProbFloor)); }

// dL/dz_i = p_i (g_i - sum_j p_j g_j) for L a function of p = softmax(z).
void softmax_backward(std::span<const double> p, std::span<const double> g, std::span<double> dz) {
    double dot = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) dot += p[i] * g[i];
    for (std::size_t i = 0; i < p.size(); ++i) dz[i] = p[i] * (g[i] - dot);
}

// KL(onehot(label) || q).
double kl_onehot(std::size_t label, std::span<const double> q) { return -safe_log(q[label]); }

std::size_t onehot_label(const ProbDist& y) {
    std::size_t label = y.size();
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1.0) {
            label = i;
        } else if (y[i] != 0.0) {
            throw DomainError("label distribution is not onehot");
        }
    }
    if (label == y.size()) throw DomainError("label distribution is not onehot");
    return label;
}

void check_logits(std::span<const double> z) {
    if (z.size() < 2) throw DomainError("need at least 2 logits");
    for (double v : z)
        if (!std::isfinite(v)) throw DomainError("non-finite logit");
}

LossOutput run_kernel(const LossSpec& spec, const ProbDist& y,
                      std::initializer_list<std::span<const double>> views) {
    spec.validate();
    const std::size_t label = onehot_label(y);
    for (auto z : views) {
        check_logits(z);
        if (z.size() != y.size())
            throw DomainError("logit dimension " + std::to_string(z.size()) +
                              " does not match label dimension " + std::to_string(y.size()));
    }
    LossOutput out;
    out.grads.assign(views.size(), std::vector<double>(y.size(), 0.0));
    std::vector<std::span<double>> grads(out.grads.begin(), out.grads.end());
    std::vector<std::span<const double>> logits(views.begin(), views.end());
    out.value = loss_kernel(spec, label, logits, grads);
    if (!std::isfinite(out.value)) throw NumericError("loss value is not finite");
    return out;
}

}  // namespace

std::string_view to_string(LossKind kind) {
    switch (kind) {
        case LossKind::CE: return "CE";
        case LossKind::JS: return "JS";
        case LossKind::GJS: return "GJS";
        case LossKind::JS_MEAN_ABLATION: return "JS_MEAN_ABLATION";
        case LossKind::GCE: return "GCE";
        case LossKind::SCE: return "SCE";
        case LossKind::BOOTSTRAP_SOFT: return "BOOTSTRAP_SOFT";
        case LossKind::LABEL_SMOOTHING: return "LABEL_SMOOTHING";
    }
    return "?";
}

LossKind parse_loss_kind(std::string_view name) {
    std::string s(name);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    std::replace(s.begin(), s.end(), '-', '_');
    if (s == "CE") return LossKind::CE;
    if (s == "JS") return LossKind::JS;
    if (s == "GJS") return LossKind::GJS;
    if (s == "JS_MEAN_ABLATION" || s == "JS_MEAN" || s == "JSM") return LossKind::JS_MEAN_ABLATION;
    if (s == "GCE") return LossKind::GCE;
    if (s == "SCE") return LossKind::SCE;
    if (s == "BOOTSTRAP_SOFT" || s == "BS") return LossKind::BOOTSTRAP_SOFT;
    if (s == "LABEL_SMOOTHING" || s == "LS") return LossKind::LABEL_SMOOTHING;
    throw DomainError("unknown loss kind '" + std::string(name) + "'");
}

LossSpec LossSpec::js(double pi) {
    LossSpec s;
    s.kind = LossKind::JS;
    s.pi = pi;
    return s;
}

LossSpec LossSpec::gjs(double pi) {
    LossSpec s;
    s.kind = LossKind::GJS;
    s.pi = pi;
    return s;
}

LossSpec LossSpec::js_mean_ablation(double pi) {
    LossSpec s;
    s.kind = LossKind::JS_MEAN_ABLATION;
    s.pi = pi;
    return s;
}

LossSpec LossSpec::gce(double q) {
    LossSpec s;
    s.kind = LossKind::GCE;
    s.q = q;
    return s;
}

LossSpec LossSpec::sce(double alpha, double beta, double A) {
    LossSpec s;
    s.kind = LossKind::SCE;
    s.alpha = alpha;
    s.beta = beta;
    s.A = A;
    return s;
}

LossSpec LossSpec::bootstrap_soft(double beta) {
    LossSpec s;
    s.kind = LossKind::BOOTSTRAP_SOFT;
    s.beta = beta;
    return s;
}

LossSpec LossSpec::label_smoothing(double epsilon) {
    LossSpec s;
    s.kind = LossKind::LABEL_SMOOTHING;
    s.epsilon = epsilon;
    return s;
}

void LossSpec::validate() const {
    switch (kind) {
        case LossKind::CE: break;
        case LossKind::JS:
        case LossKind::GJS:
        case LossKind::JS_MEAN_ABLATION: require_pi(pi); break;
        case LossKind::GCE:
            if (!(q > 0.0 && q <= 1.0)) throw DomainError("GCE q must lie in (0, 1]");
            break;
        case LossKind::SCE:
            if (!(alpha > 0.0)) throw DomainError("SCE alpha must be positive");
            if (!(beta >= 0.0)) throw DomainError("SCE beta must be nonnegative");
            if (!(A < 0.0)) throw DomainError("SCE A must be negative");
            break;
        case LossKind::BOOTSTRAP_SOFT:
            if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("bootstrap beta must lie in [0, 1]");
            break;
        case LossKind::LABEL_SMOOTHING:
            if (!(epsilon >= 0.0 && epsilon < 1.0))
                throw DomainError("label smoothing epsilon must lie in [0, 1)");
            break;
    }
}

int LossSpec::views() const noexcept {
    return (kind == LossKind::GJS || kind == LossKind::JS_MEAN_ABLATION) ? 2 : 1;
}

std::string_view LossSpec::primary_param_name() const noexcept {
    switch (kind) {
        case LossKind::CE: return "";
        case LossKind::JS:
        case LossKind::GJS:
        case LossKind::JS_MEAN_ABLATION: return "pi";
        case LossKind::GCE: return "q";
        case LossKind::SCE: return "alpha";
        case LossKind::BOOTSTRAP_SOFT: return "beta";
        case LossKind::LABEL_SMOOTHING: return "epsilon";
    }
    return "";
}

double LossSpec::primary_param() const noexcept {
    switch (kind) {
        case LossKind::CE: return 0.0;
        case LossKind::JS:
        case LossKind::GJS:
        case LossKind::JS_MEAN_ABLATION: return pi;
        case LossKind::GCE: return q;
        case LossKind::SCE: return alpha;
        case LossKind::BOOTSTRAP_SOFT: return beta;
        case LossKind::LABEL_SMOOTHING: return epsilon;
    }
    return 0.0;
}

void LossSpec::set_primary_param(double value) {
    switch (kind) {
        case LossKind::CE: break;
        case LossKind::JS:
        case LossKind::GJS:
        case LossKind::JS_MEAN_ABLATION: pi = value; break;
        case LossKind::GCE: q = value; break;
        case LossKind::SCE: alpha = value; break;
        case LossKind::BOOTSTRAP_SOFT: beta = value; break;
        case LossKind::LABEL_SMOOTHING: epsilon = value; break;
    }
}

std::string LossSpec::describe() const {
    char buf[128];
    switch (kind) {
        case LossKind::CE: return "CE";
        case LossKind::SCE:
            std::snprintf(buf, sizeof buf, "SCE(alpha=%g,beta=%g,A=%g)", alpha, beta, A);
            return buf;
        default:
            std::snprintf(buf, sizeof buf, "%s(%s=%g)", std::string(to_string(kind)).c_str(),
                          std::string(primary_param_name()).c_str(), primary_param());
            return buf;
    }
}

ProbDist softmax(std::span<const double> logits) {
    check_logits(logits);
    std::vector<double> p(logits.size());
    softmax_into(logits, p);
    return ProbDist(std::move(p));
}

double scale_factor(double pi) {
    require_pi(pi);
    return -(1.0 - pi) * std::log(1.0 - pi);
}

double loss_kernel(const LossSpec& spec, std::size_t label,
                   std::span<const std::span<const double>> logits,
                   std::span<const std::span<double>> grads) {
    const std::size_t k = logits[0].size();
    std::vector<double> p1(k), g(k);
    softmax_into(logits[0], p1);

    switch (spec.kind) {
        case LossKind::CE: {
            for (std::size_t i = 0; i < k; ++i) grads[0][i] = p1[i] - (i == label ? 1.0 : 0.0);
            return -safe_log(p1[label]);
        }
        case LossKind::JS: {
            const double pi = spec.pi;
            const double z = scale_factor(pi);
            std::vector<double> m(k);
            for (std::size_t i = 0; i < k; ++i) m[i] = (1.0 - pi) * p1[i] + (i == label ? pi : 0.0);
            const double value = pi * kl_onehot(label, m) + (1.0 - pi) * detail::kl(p1, m);
            // d/dp_i [H(m) - pi H(y) - (1 - pi) H(p)] = (1 - pi)(log p_i - log m_i)
            for (std::size_t i = 0; i < k; ++i)
                g[i] = (1.0 - pi) * (safe_log(p1[i]) - safe_log(m[i])) / z;
            softmax_backward(p1, g, grads[0]);
            return value / z;
        }
        case LossKind::GJS:
        case LossKind::JS_MEAN_ABLATION: {
            const double pi = spec.pi;
            const double z = scale_factor(pi);
            std::vector<double> p2(k), mean(k), m(k);
            softmax_into(logits[1], p2);
            for (std::size_t i = 0; i < k; ++i) {
                mean[i] = 0.5 * (p1[i] + p2[i]);
                m[i] = (1.0 - pi) * mean[i] + (i == label ? pi : 0.0);
            }
            double value = pi * kl_onehot(label, m) + (1.0 - pi) * detail::kl(mean, m);
            const double w = 0.5 * (1.0 - pi) / z;
            if (spec.kind == LossKind::GJS) {
                std::vector<double> pm(k);
                for (std::size_t i = 0; i < k; ++i) pm[i] = 0.5 * (p1[i] + p2[i]);
                value += (1.0 - pi) * (0.5 * detail::kl(p1, pm) + 0.5 * detail::kl(p2, pm));
                // Whole objective equals H(M) - pi H(y) - (1 - pi)/2 (H(p1) + H(p2)).
                for (std::size_t i = 0; i < k; ++i) g[i] = w * (safe_log(p1[i]) - safe_log(m[i]));
                softmax_backward(p1, g, grads[0]);
                for (std::size_t i = 0; i < k; ++i) g[i] = w * (safe_log(p2[i]) - safe_log(m[i]));
                softmax_backward(p2, g, grads[1]);
            } else {
                for (std::size_t i = 0; i < k; ++i) g[i] = w * (safe_log(mean[i]) - safe_log(m[i]));
                softmax_backward(p1, g, grads[0]);
                softmax_backward(p2, g, grads[1]);
            }
            return value / z;
        }
        case LossKind::GCE: {
            const double py = std::max(p1[label], kProbFloor);
            const double pq = std::pow(py, spec.q);
            for (std::size_t i = 0; i < k; ++i) grads[0][i] = pq * (p1[i] - (i == label ? 1.0 : 0.0));
            return (1.0 - pq) / spec.q;
        }
        case LossKind::SCE: {
            const double py = p1[label];
            const double ce = -safe_log(py);
            const double rce = -spec.A * (1.0 - py);
            const double c = spec.alpha - spec.beta * spec.A * py;
            for (std::size_t i = 0; i < k; ++i) grads[0][i] = c * (p1[i] - (i == label ? 1.0 : 0.0));
            return spec.alpha * ce + spec.beta * rce;
        }
        case LossKind::BOOTSTRAP_SOFT:
        case LossKind::LABEL_SMOOTHING: {
            std::vector<double> t(k);
            for (std::size_t i = 0; i < k; ++i) {
                const double yi = (i == label) ? 1.0 : 0.0;
                t[i] = spec.kind == LossKind::BOOTSTRAP_SOFT
                           ? spec.beta * yi + (1.0 - spec.beta) * p1[i]
                           : (1.0 - spec.epsilon) * yi + spec.epsilon / static_cast<double>(k);
            }
            double value = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                if (t[i] > 0.0) value -= t[i] * safe_log(p1[i]);
                grads[0][i] = p1[i] - t[i];
            }
            return value;
        }
    }
    return 0.0;
}

LossOutput ce_loss(const ProbDist& y, std::span<const double> logits) {
    return run_kernel(LossSpec::ce(), y, {logits});
}

LossOutput js_loss(const ProbDist& y, std::span<const double> logits, double pi) {
    return run_kernel(LossSpec::js(pi), y, {logits});
}

LossOutput gjs_loss(const ProbDist& y, std::span<const double> logits1,
                    std::span<const double> logits2, double pi) {
    return run_kernel(LossSpec::gjs(pi), y, {logits1, logits2});
}

LossOutput js_mean_ablation_loss(const ProbDist& y, std::span<const double> logits1,
                                 std::span<const double> logits2, double pi) {
    return run_kernel(LossSpec::js_mean_ablation(pi), y, {logits1, logits2});
}

LossOutput gce_loss(const ProbDist& y, std::span<const double> logits, double q) {
    return run_kernel(LossSpec::gce(q), y, {logits});
}

LossOutput sce_loss(const ProbDist& y, std::span<const double> logits, double alpha, double beta,
                    double A) {
    return run_kernel(LossSpec::sce(alpha, beta, A), y, {logits});
}

LossOutput bootstrap_soft_loss(const ProbDist& y, std::span<const double> logits, double beta) {
    return run_kernel(LossSpec::bootstrap_soft(beta), y, {logits});
}

LossOutput label_smoothing_loss(const ProbDist& y, std::span<const double> logits, double epsilon) {
    return run_kernel(LossSpec::label_smoothing(epsilon), y, {logits});
}

LossOutput soft_target_ce(const ProbDist& target, std::span<const double> logits) {
    check_logits(logits);
    if (logits.size() != target.size()) throw DomainError("soft_target_ce: dimension mismatch");
    std::vector<double> p(logits.size());
    softmax_into(logits, p);
    LossOutput out;
    out.grads.assign(1, std::vector<double>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (target[i] > 0.0) out.value -= target[i] * safe_log(p[i]);
        out.grads[0][i] = p[i] - target[i];
    }
    return out;
}

LossOutput evaluate_loss(const LossSpec& spec, const ProbDist& y,
                         std::span<const std::vector<double>> logits) {
    if (logits.size() != static_cast<std::size_t>(spec.views()))
        throw DomainError(std::string(to_string(spec.kind)) + " expects " +
                          std::to_string(spec.views()) + " logit vectors, got " +
                          std::to_string(logits.size()));
    if (spec.views() == 2) return run_kernel(spec, y, {logits[0], logits[1]});
    return run_kernel(spec, y, {logits[0]});
}

std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& loss,
                                     std::span<const double> logits, double h) {
    if (!(h > 0.0)) throw DomainError("finite difference step must be positive");
    std::vector<double> z(logits.begin(), logits.end());
    std::vector<double> grad(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double orig = z[i];
        z[i] = orig + h;
        const double up = loss(z);
        z[i] = orig - h;
        const double down = loss(z);
        z[i] = orig;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericError("loss is not finite at a perturbed point");
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace nll

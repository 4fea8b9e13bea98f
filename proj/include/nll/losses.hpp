#pragma once

#include "nll/divergences.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nll {

enum class LossKind {
    CE,
    JS,
    GJS,
    JS_MEAN_ABLATION,
    GCE,
    SCE,
    BOOTSTRAP_SOFT,
    LABEL_SMOOTHING,
};

inline constexpr LossKind kAllLossKinds[] = {
    LossKind::CE,  LossKind::JS,  LossKind::GJS,            LossKind::JS_MEAN_ABLATION,
    LossKind::GCE, LossKind::SCE, LossKind::BOOTSTRAP_SOFT, LossKind::LABEL_SMOOTHING,
};

std::string_view to_string(LossKind kind);
/// Accepts the canonical names (case-insensitive) plus the short forms used on
/// the command line: ce, js, gjs, js-mean, gce, sce, bs, ls.
LossKind parse_loss_kind(std::string_view name);

/// Loss family plus its hyperparameters. Only the fields relevant to `kind`
/// are read: pi (JS, GJS, JS_MEAN_ABLATION), q (GCE), alpha/beta/A (SCE),
/// beta (BOOTSTRAP_SOFT), epsilon (LABEL_SMOOTHING).
struct LossSpec {
    LossKind kind = LossKind::CE;
    double pi = 0.5;
    double q = 0.7;
    double alpha = 0.1;
    double beta = 1.0;
    double A = std::log(1e-4);
    double epsilon = 0.1;

    static LossSpec ce() { return {}; }
    static LossSpec js(double pi);
    static LossSpec gjs(double pi);
    static LossSpec js_mean_ablation(double pi);
    static LossSpec gce(double q);
    static LossSpec sce(double alpha, double beta, double A = std::log(1e-4));
    static LossSpec bootstrap_soft(double beta);
    static LossSpec label_smoothing(double epsilon);

    /// Throws DomainError if a hyperparameter used by `kind` is out of range.
    void validate() const;

    /// Number of prediction views the loss consumes (2 for GJS and the
    /// mean ablation, 1 otherwise).
    int views() const noexcept;

    /// Name and value of the hyperparameter swept in stage 2 of a sweep;
    /// empty name for CE.
    std::string_view primary_param_name() const noexcept;
    double primary_param() const noexcept;
    void set_primary_param(double value);

    std::string describe() const;

    bool operator==(const LossSpec&) const = default;
};

/// Scalar loss value and one gradient (w.r.t. logits) per supplied view.
struct LossOutput {
    double value = 0.0;
    std::vector<std::vector<double>> grads;
};

ProbDist softmax(std::span<const double> logits);

/// Z(pi) = -(1 - pi) log(1 - pi), the constant dividing JS-family losses.
double scale_factor(double pi);

LossOutput ce_loss(const ProbDist& y, std::span<const double> logits);
LossOutput js_loss(const ProbDist& y, std::span<const double> logits, double pi);
LossOutput gjs_loss(const ProbDist& y, std::span<const double> logits1,
                    std::span<const double> logits2, double pi);
LossOutput js_mean_ablation_loss(const ProbDist& y, std::span<const double> logits1,
                                 std::span<const double> logits2, double pi);
LossOutput gce_loss(const ProbDist& y, std::span<const double> logits, double q);
LossOutput sce_loss(const ProbDist& y, std::span<const double> logits, double alpha, double beta,
                    double A);
/// The prediction inside the soft target is treated as a constant.
LossOutput bootstrap_soft_loss(const ProbDist& y, std::span<const double> logits, double beta);
LossOutput label_smoothing_loss(const ProbDist& y, std::span<const double> logits, double epsilon);

/// Cross entropy against an arbitrary fixed target distribution.
LossOutput soft_target_ce(const ProbDist& target, std::span<const double> logits);

/// Dispatches on spec.kind. `logits` must hold exactly spec.views() vectors.
LossOutput evaluate_loss(const LossSpec& spec, const ProbDist& y,
                         std::span<const std::vector<double>> logits);

/// Allocation-light kernel used by the trainer: writes one gradient per view
/// into `grads` and returns the loss value. Inputs are assumed validated.
double loss_kernel(const LossSpec& spec, std::size_t label,
                   std::span<const std::span<const double>> logits,
                   std::span<const std::span<double>> grads);

/// Central-difference gradient (L(z + h e_i) - L(z - h e_i)) / 2h.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& loss,
                                     std::span<const double> logits, double h = 1e-5);

}  // namespace nll

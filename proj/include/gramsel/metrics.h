#pragma once

#include <compare>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "gramsel/gramian.h"
#include "gramsel/spectrum.h"

namespace gramsel {

enum class MetricKind {
  kTrace,
  kTraceInverse,  // stored negated: -tr W^{-1}
  kTracePinv,     // -tr W^+
  kLogDet,
  kLogProdNonzero,
  kRank,
  kLambdaMin,
  kNthRootLogDet,  // (1/n) log det W
  kWeightedLogDet,  // log det(Q W Q^T)
};

/// Extended real: a finite double or negative infinity.
class MetricValue {
 public:
  constexpr MetricValue() = default;
  constexpr explicit MetricValue(double v) : v_(v) {}
  static constexpr MetricValue neg_infinity() { return MetricValue(-std::numeric_limits<double>::infinity()); }

  constexpr bool is_neg_infinity() const { return v_ == -std::numeric_limits<double>::infinity(); }
  constexpr bool is_finite() const { return !is_neg_infinity(); }
  constexpr double value() const { return v_; }

  friend constexpr auto operator<=>(MetricValue, MetricValue) = default;

 private:
  double v_ = 0.0;
};

/// Metric selector. Only the weighted log-det variant carries data (the weight matrix Q).
class Metric {
 public:
  /// Throws ValidationError for kWeightedLogDet; use weighted_log_det().
  static Metric of(MetricKind kind);
  /// Q is m x n with full row rank m <= n, checked here.
  static Metric weighted_log_det(Eigen::MatrixXd q);
  /// CLI names: trace, trace-inv, trace-pinv, logdet, logprod, rank, lambda-min,
  /// nthroot-logdet. weighted-logdet needs a Q matrix and is built by the caller.
  static Metric parse(std::string_view name);

  MetricKind kind() const { return kind_; }
  const Eigen::MatrixXd& weight() const { return q_; }
  std::string_view name() const;

  friend bool operator==(const Metric& x, const Metric& y) { return x.kind_ == y.kind_ && x.q_ == y.q_; }

 private:
  explicit Metric(MetricKind kind, Eigen::MatrixXd q = {}) : kind_(kind), q_(std::move(q)) {}
  MetricKind kind_;
  Eigen::MatrixXd q_;
};

std::string_view metric_name(MetricKind kind);
std::optional<MetricKind> metric_kind_from_name(std::string_view name);

/// Set functions proven submodular (and monotone) over actuator subsets. lambda_min is
/// the exception; trace is modular.
bool is_submodular(MetricKind kind);
/// Metrics that are -inf on rank-deficient Gramians.
bool is_strict(MetricKind kind);

struct Evaluation {
  MetricValue value;
  int rank;  // numerical rank of W
};

/// Computes the eigenvalues of W once and derives the metric and numerical rank.
/// Throws PsdViolation if an eigenvalue lies below -max(1e-10 lambda_max, abs_floor).
Evaluation evaluate(const Metric& metric, const Eigen::MatrixXd& w, const RankPolicy& policy = {});

MetricValue eval_metric(const Metric& metric, const Gramian& w, const RankPolicy& policy = {});

/// Greedy gain f(after) - f(before) with the extended-real rules: -inf -> -inf is 0,
/// -inf -> finite is +inf.
double marginal_gain(MetricValue before, MetricValue after);

/// trace(C W C^T), the squared H2 norm of (A, B, C) when W is the controllability Gramian.
double h2_norm_sq(const Gramian& w, const Eigen::MatrixXd& c);

enum class VolumeMode {
  kPaperNthRoot,  // pi^{n/2} / Gamma(n/2 + 1) * det(W)^{1/n}
  kStandardSqrt,  // pi^{n/2} / Gamma(n/2 + 1) * det(W)^{1/2}
};

/// Volume of { W^{1/2} v : |v| <= 1 }, or the printed n-th root variant. Zero when W is
/// rank deficient.
double ellipsoid_volume(const Gramian& w, VolumeMode mode, const RankPolicy& policy = {});

}  // namespace gramsel

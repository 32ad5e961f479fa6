#include "gramsel/metrics.h"

#include <array>
#include <cmath>
#include <numbers>

#include "gramsel/errors.h"

namespace gramsel {

namespace {

constexpr std::array<std::pair<MetricKind, std::string_view>, 9> kNames{{
    {MetricKind::kTrace, "trace"},
    {MetricKind::kTraceInverse, "trace-inv"},
    {MetricKind::kTracePinv, "trace-pinv"},
    {MetricKind::kLogDet, "logdet"},
    {MetricKind::kLogProdNonzero, "logprod"},
    {MetricKind::kRank, "rank"},
    {MetricKind::kLambdaMin, "lambda-min"},
    {MetricKind::kNthRootLogDet, "nthroot-logdet"},
    {MetricKind::kWeightedLogDet, "weighted-logdet"},
}};

// Clipping band for tiny negative eigenvalues from roundoff.
double clip_band(double lambda_max, const RankPolicy& policy) {
  return std::max(kPsdTolerance * lambda_max, policy.abs_floor);
}

Eigen::VectorXd clipped_eigenvalues(const Eigen::MatrixXd& w, const RankPolicy& policy) {
  Eigen::VectorXd eig = symmetric_eigenvalues(w);
  if (eig.size() == 0) return eig;
  const double band = clip_band(eig(eig.size() - 1), policy);
  if (eig(0) < -band) {
    throw PsdViolation("Gramian eigenvalue " + std::to_string(eig(0)) + " is below the clipping band", eig(0));
  }
  eig = eig.cwiseMax(0.0);
  return eig;
}

}  // namespace

std::string_view metric_name(MetricKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<MetricKind> metric_kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

Metric Metric::of(MetricKind kind) {
  if (kind == MetricKind::kWeightedLogDet) throw ValidationError("weighted-logdet needs a weight matrix Q");
  return Metric(kind);
}

Metric Metric::weighted_log_det(Eigen::MatrixXd q) {
  if (q.rows() < 1 || q.rows() > q.cols()) {
    throw DimensionError("weight matrix Q must be m x n with 1 <= m <= n");
  }
  const Eigen::VectorXd eig = symmetric_eigenvalues(q * q.transpose());
  if (numerical_rank(eig, RankPolicy{}) != q.rows()) throw ValidationError("weight matrix Q must have full row rank");
  return Metric(MetricKind::kWeightedLogDet, std::move(q));
}

Metric Metric::parse(std::string_view name) {
  const auto kind = metric_kind_from_name(name);
  if (!kind) throw ValidationError("unknown metric '" + std::string(name) + "'");
  return of(*kind);
}

std::string_view Metric::name() const { return metric_name(kind_); }

bool is_submodular(MetricKind kind) { return kind != MetricKind::kLambdaMin; }

bool is_strict(MetricKind kind) {
  switch (kind) {
    case MetricKind::kTraceInverse:
    case MetricKind::kLogDet:
    case MetricKind::kNthRootLogDet:
    case MetricKind::kWeightedLogDet:
      return true;
    default:
      return false;
  }
}

Evaluation evaluate(const Metric& metric, const Eigen::MatrixXd& w, const RankPolicy& policy) {
  const Eigen::VectorXd eig = clipped_eigenvalues(w, policy);
  const Eigen::Index n = eig.size();
  const double tau = rank_threshold(eig, policy);
  const int rank = static_cast<int>((eig.array() > tau).count());
  const bool full = rank == n;

  auto sum_log = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (eig(i) > tau) s += std::log(eig(i));
    }
    return s;
  };
  auto sum_inv = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (eig(i) > tau) s += 1.0 / eig(i);
    }
    return s;
  };

  MetricValue v;
  switch (metric.kind()) {
    case MetricKind::kTrace:
      v = MetricValue(eig.sum());
      break;
    case MetricKind::kTraceInverse:
      v = full ? MetricValue(-sum_inv()) : MetricValue::neg_infinity();
      break;
    case MetricKind::kTracePinv:
      v = MetricValue(-sum_inv());
      break;
    case MetricKind::kLogDet:
      v = full ? MetricValue(sum_log()) : MetricValue::neg_infinity();
      break;
    case MetricKind::kLogProdNonzero:
      v = MetricValue(sum_log());
      break;
    case MetricKind::kRank:
      v = MetricValue(rank);
      break;
    case MetricKind::kLambdaMin:
      v = MetricValue(n ? eig(0) : 0.0);
      break;
    case MetricKind::kNthRootLogDet:
      v = full ? MetricValue(sum_log() / static_cast<double>(n)) : MetricValue::neg_infinity();
      break;
    case MetricKind::kWeightedLogDet: {
      const Eigen::MatrixXd& q = metric.weight();
      if (q.cols() != w.rows()) throw DimensionError("weight matrix Q has the wrong number of columns");
      const Eigen::MatrixXd qwq = q * w.selfadjointView<Eigen::Lower>() * q.transpose();
      const Eigen::VectorXd qe = clipped_eigenvalues(0.5 * (qwq + qwq.transpose()), policy);
      const double qtau = rank_threshold(qe, policy);
      if ((qe.array() > qtau).count() < qe.size()) {
        v = MetricValue::neg_infinity();
      } else {
        v = MetricValue(qe.array().log().sum());
      }
      break;
    }
  }
  return {v, rank};
}

MetricValue eval_metric(const Metric& metric, const Gramian& w, const RankPolicy& policy) {
  return evaluate(metric, w.matrix(), policy).value;
}

double marginal_gain(MetricValue before, MetricValue after) {
  if (before.is_neg_infinity()) {
    return after.is_neg_infinity() ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return after.value() - before.value();
}

double h2_norm_sq(const Gramian& w, const Eigen::MatrixXd& c) {
  if (c.cols() != w.n()) throw DimensionError("h2_norm_sq: C has the wrong number of columns");
  return (c * w.matrix() * c.transpose()).trace();
}

double ellipsoid_volume(const Gramian& w, VolumeMode mode, const RankPolicy& policy) {
  const Eigen::VectorXd eig = clipped_eigenvalues(w.matrix(), policy);
  const auto n = static_cast<double>(eig.size());
  if (eig.size() == 0 || numerical_rank(eig, policy) < eig.size()) return 0.0;
  const double log_det = eig.array().log().sum();
  const double log_unit_ball = 0.5 * n * std::log(std::numbers::pi) - std::lgamma(0.5 * n + 1.0);
  const double power = mode == VolumeMode::kPaperNthRoot ? 1.0 / n : 0.5;
  return std::exp(log_unit_ball + power * log_det);
}

}  // namespace gramsel

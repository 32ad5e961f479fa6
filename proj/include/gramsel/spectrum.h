#pragma once

#include <Eigen/Core>

namespace gramsel {

/// Numerical-rank thresholding: eigenvalue lambda counts as nonzero when
/// lambda > max(rel_tol * lambda_max, abs_floor).
struct RankPolicy {
  double rel_tol = 1e-10;
  double abs_floor = 1e-14;

  /// Throws ValidationError unless 0 < rel_tol < 1 and abs_floor > 0.
  void validate() const;
};

/// Eigenvalues of a symmetric matrix in ascending order (lower triangle is read).
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& w);

double rank_threshold(const Eigen::VectorXd& ascending_eigenvalues, const RankPolicy& policy);

int numerical_rank(const Eigen::VectorXd& ascending_eigenvalues, const RankPolicy& policy);

}  // namespace gramsel

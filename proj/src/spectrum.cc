#include "gramsel/spectrum.h"

#include <algorithm>

#include <Eigen/Eigenvalues>

#include "gramsel/errors.h"

namespace gramsel {

void RankPolicy::validate() const {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ValidationError("rank policy: rel_tol must lie in (0, 1)");
  if (!(abs_floor > 0.0)) throw ValidationError("rank policy: abs_floor must be positive");
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& w) {
  if (w.size() == 0) return Eigen::VectorXd();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigenvalue iteration did not converge");
  return es.eigenvalues();
}

double rank_threshold(const Eigen::VectorXd& ascending_eigenvalues, const RankPolicy& policy) {
  const double top = ascending_eigenvalues.size() ? ascending_eigenvalues(ascending_eigenvalues.size() - 1) : 0.0;
  return std::max(policy.rel_tol * top, policy.abs_floor);
}

int numerical_rank(const Eigen::VectorXd& ascending_eigenvalues, const RankPolicy& policy) {
  const double tau = rank_threshold(ascending_eigenvalues, policy);
  return static_cast<int>((ascending_eigenvalues.array() > tau).count());
}

}  // namespace gramsel

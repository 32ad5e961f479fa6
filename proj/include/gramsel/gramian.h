#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "gramsel/lti.h"

namespace gramsel {

/// Absolute Lyapunov residual target, relative to max(1, ||M||_F).
inline constexpr double kLyapunovResidualTol = 1e-8;
/// Gramian PSD invariant: lambda_min >= -kPsdTolerance * max(1, lambda_max).
inline constexpr double kPsdTolerance = 1e-10;

struct InfiniteHorizon {};
struct FiniteHorizon {
  double t;
};

/// Symmetric positive semidefinite reachability Gramian.
class Gramian {
 public:
  /// Symmetrizes the input. Does not check definiteness; see check_psd().
  explicit Gramian(const Eigen::MatrixXd& m, std::optional<double> horizon = std::nullopt);

  static Gramian zero(int n) { return Gramian(Eigen::MatrixXd::Zero(n, n)); }

  int n() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  /// nullopt for the infinite horizon.
  std::optional<double> horizon() const { return horizon_; }

  /// Throws PsdViolation if the smallest eigenvalue is below the tolerance band.
  void check_psd() const;

 private:
  Eigen::MatrixXd matrix_;
  std::optional<double> horizon_;
};

/// Solves A W + W A^T + M = 0 for stable A by complex Schur reduction and
/// column-wise triangular back substitution. The Schur form of A is computed once
/// and reused, so solving for many right-hand sides costs one O(n^3) factorization
/// plus O(n^3) per solve.
class LyapunovSolver {
 public:
  /// Throws InstabilityError unless spectral_abscissa(A) < 0.
  explicit LyapunovSolver(const Eigen::MatrixXd& a);

  int n() const { return static_cast<int>(schur_t_.rows()); }

  /// Returns the symmetrized solution. Throws ValidationError for a non-symmetric M and
  /// ResidualError when ||A W + W A^T + M||_F > 1e-8 max(1, ||M||_F).
  Gramian solve(const Eigen::MatrixXd& m) const;

  /// Unchecked solve, without symmetrization, for callers that verify themselves.
  Eigen::MatrixXd solve_raw(const Eigen::MatrixXd& m) const;

  const Eigen::MatrixXd& a() const { return a_; }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXcd schur_t_;
  Eigen::MatrixXcd schur_u_;
};

Gramian solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& m);

/// ||A W + W A^T + M||_F
double lyapunov_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w, const Eigen::MatrixXd& m);

/// Per-candidate Gramians W_s and the base Gramian of B0. Any subset Gramian is a sum
/// of cached matrices; no further Lyapunov solves are needed.
class GramianCache {
 public:
  /// Solves one Lyapunov equation per candidate plus one for B0 (if non-empty).
  /// Solver failures are rethrown with the offending candidate id in the message.
  explicit GramianCache(const LtiSystem& sys);

  const LtiSystem& system() const { return *system_; }
  int n() const { return system_->n(); }
  int size() const { return system_->num_candidates(); }

  const Gramian& base() const { return base_; }
  const Gramian& candidate(int index) const { return per_candidate_[index]; }
  const Gramian& candidate(std::string_view id) const;

  /// base + sum over indices; throws std::out_of_range on a bad index.
  Gramian gramian_of(std::span<const int> indices) const;
  /// Same, by id; throws ValidationError for unknown ids.
  Gramian gramian_of_ids(std::span<const std::string> ids) const;

  /// In-place W += W_s, no symmetrization (exact sums of symmetric matrices stay symmetric).
  void add_candidate(Eigen::MatrixXd& w, int index) const;

 private:
  const LtiSystem* system_;
  Gramian base_;
  std::vector<Gramian> per_candidate_;
};

/// W(t) = int_0^t e^{A s} B B^T e^{A^T s} ds from the exponential of the 2n x 2n block
/// matrix [[-A, B B^T], [0, A^T]] t. A may be unstable. Throws ValidationError for t <= 0.
Gramian finite_horizon_gramian(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t);

/// Observability Gramian of (A, C), i.e. the controllability Gramian of (A^T, C^T).
Gramian observability_gramian(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c);

/// Minimum-energy transfer from x(0) = 0 to x(t) = x_f.
struct EnergyControl {
  double horizon;
  Eigen::VectorXd target;
  double energy;
  /// n x n Gramian at the horizon.
  Eigen::MatrixXd gramian;
  /// W(t)^{-1} x_f, so that u*(tau) = B^T e^{A^T (t - tau)} costate.
  Eigen::VectorXd costate;
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;

  /// u*(tau) for tau in [0, t].
  Eigen::VectorXd input(double tau) const;
};

/// Throws UncontrollableError (with the numerical rank) when W(t) is rank deficient
/// under the default rank policy.
EnergyControl min_energy_input(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t,
                               const Eigen::VectorXd& x_f);

struct SimulationResult {
  Eigen::VectorXd endpoint;
  int steps;
};

/// Integrates x' = A x + B u*(tau) from the origin with classical RK4, starting at 2000
/// steps and doubling until the endpoint moves by less than 1e-9.
SimulationResult simulate_min_energy(const EnergyControl& control);

}  // namespace gramsel

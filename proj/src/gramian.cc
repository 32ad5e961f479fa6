#include "gramsel/gramian.h"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "gramsel/errors.h"
#include "gramsel/kernels.h"
#include "gramsel/spectrum.h"

namespace gramsel {

namespace {

std::span<double> flat(Eigen::MatrixXd& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> flat(const Eigen::MatrixXd& m) {
  return {m.data(), static_cast<std::size_t>(m.size())};
}

double frobenius(const Eigen::MatrixXd& m) { return std::sqrt(kernels::sum_squares(flat(m))); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

Gramian::Gramian(const Eigen::MatrixXd& m, std::optional<double> horizon) : horizon_(horizon) {
  if (m.rows() != m.cols()) throw DimensionError("Gramian must be square");
  matrix_ = 0.5 * (m + m.transpose());
}

void Gramian::check_psd() const {
  if (n() == 0) return;
  const Eigen::VectorXd eig = symmetric_eigenvalues(matrix_);
  const double lo = eig(0);
  const double hi = eig(eig.size() - 1);
  if (lo < -kPsdTolerance * std::max(1.0, hi)) {
    throw PsdViolation("Gramian is not positive semidefinite: lambda_min = " + fmt(lo), lo);
  }
}

double lyapunov_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w, const Eigen::MatrixXd& m) {
  Eigen::MatrixXd r = a * w;
  r += w * a.transpose();
  kernels::accumulate(flat(r), flat(m));
  return frobenius(r);
}

LyapunovSolver::LyapunovSolver(const Eigen::MatrixXd& a) : a_(a) {
  if (a.rows() != a.cols()) throw DimensionError("Lyapunov: A must be square");
  if (a.size() == 0) return;
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) throw NumericalError("Lyapunov: Schur iteration did not converge");
  schur_t_ = schur.matrixT();
  schur_u_ = schur.matrixU();
  const double abscissa = schur_t_.diagonal().real().maxCoeff();
  if (!(abscissa < 0.0)) {
    throw InstabilityError("Lyapunov: A is not stable (spectral abscissa " + fmt(abscissa) + ")", abscissa);
  }
}

Eigen::MatrixXd LyapunovSolver::solve_raw(const Eigen::MatrixXd& m) const {
  const Eigen::Index n = schur_t_.rows();
  if (m.rows() != n || m.cols() != n) throw DimensionError("Lyapunov: M has the wrong shape");
  if (n == 0) return Eigen::MatrixXd(0, 0);
  // With A = U T U^H the equation becomes T Y + Y T^H = -U^H M U. Column j of Y T^H
  // only involves columns k >= j of Y, so sweep j from the last column down.
  const Eigen::MatrixXcd rhs = -(schur_u_.adjoint() * m.cast<std::complex<double>>() * schur_u_);
  Eigen::MatrixXcd y(n, n);
  Eigen::MatrixXcd shifted = schur_t_;
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd c = rhs.col(j);
    if (j + 1 < n) {
      c.noalias() -= y.rightCols(n - j - 1) * schur_t_.row(j).tail(n - j - 1).adjoint();
    }
    const std::complex<double> shift = std::conj(schur_t_(j, j));
    shifted.diagonal() = schur_t_.diagonal().array() + shift;
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(c);
  }
  return (schur_u_ * y * schur_u_.adjoint()).real();
}

Gramian LyapunovSolver::solve(const Eigen::MatrixXd& m) const {
  const double m_norm = frobenius(m);
  if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m_norm)) {
    throw ValidationError("Lyapunov: right-hand side is not symmetric");
  }
  Gramian w(solve_raw(m));
  const double residual = lyapunov_residual(a_, w.matrix(), m);
  if (residual > kLyapunovResidualTol * std::max(1.0, m_norm)) {
    throw ResidualError("Lyapunov: residual " + fmt(residual) + " exceeds bound", residual);
  }
  w.check_psd();
  return w;
}

Gramian solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& m) { return LyapunovSolver(a).solve(m); }

// ---------------------------------------------------------------------------

GramianCache::GramianCache(const LtiSystem& sys) : system_(&sys), base_(Gramian::zero(sys.n())) {
  const LyapunovSolver solver(sys.a());
  const Eigen::MatrixXd& b0 = sys.base_columns();
  if (b0.cols() > 0) base_ = solver.solve(b0 * b0.transpose());
  per_candidate_.reserve(sys.num_candidates());
  for (const auto& c : sys.candidates()) {
    try {
      per_candidate_.push_back(solver.solve(c.column * c.column.transpose()));
    } catch (const ResidualError& e) {
      throw ResidualError("candidate '" + c.id + "': " + e.what(), e.residual());
    } catch (const PsdViolation& e) {
      throw PsdViolation("candidate '" + c.id + "': " + e.what(), e.min_eigenvalue());
    } catch (const NumericalError& e) {
      throw NumericalError("candidate '" + c.id + "': " + e.what());
    }
  }
}

const Gramian& GramianCache::candidate(std::string_view id) const {
  const int i = system_->index_of(id);
  if (i < 0) throw ValidationError("unknown candidate id '" + std::string(id) + "'");
  return per_candidate_[i];
}

void GramianCache::add_candidate(Eigen::MatrixXd& w, int index) const {
  kernels::accumulate(flat(w), flat(per_candidate_.at(index).matrix()));
}

Gramian GramianCache::gramian_of(std::span<const int> indices) const {
  Eigen::MatrixXd w = base_.matrix();
  for (int i : indices) add_candidate(w, i);
  return Gramian(w);
}

Gramian GramianCache::gramian_of_ids(std::span<const std::string> ids) const {
  std::vector<int> idx;
  idx.reserve(ids.size());
  for (const auto& id : ids) {
    const int i = system_->index_of(id);
    if (i < 0) throw ValidationError("unknown candidate id '" + id + "'");
    idx.push_back(i);
  }
  return gramian_of(idx);
}

// ---------------------------------------------------------------------------

Gramian finite_horizon_gramian(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) throw DimensionError("finite_horizon_gramian: shape mismatch");
  if (!(t > 0.0)) throw ValidationError("finite_horizon_gramian: horizon must be positive");
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd q = b * b.transpose();

  // Van Loan on a short interval h = t / 2^k with ||A|| h <= 1/2, then doubling
  // W(2h) = W(h) + Phi(h) W(h) Phi(h)^T. The block exponential alone would need
  // e^{-A t}, which overflows for stiff stable A over long horizons.
  const double a_norm = a.cwiseAbs().colwise().sum().maxCoeff();
  int doublings = 0;
  double h = t;
  while (a_norm * h > 0.5 && doublings < 200) {
    h *= 0.5;
    ++doublings;
  }
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -a * h;
  block.topRightCorner(n, n) = q * h;
  block.bottomRightCorner(n, n) = a.transpose() * h;
  const Eigen::MatrixXd e = block.exp();
  Eigen::MatrixXd phi = e.bottomRightCorner(n, n).transpose();
  Eigen::MatrixXd w = phi * e.topRightCorner(n, n);
  w = 0.5 * (w + w.transpose());
  for (int i = 0; i < doublings; ++i) {
    Eigen::MatrixXd next = phi * w * phi.transpose();
    kernels::accumulate(flat(next), flat(w));
    w = 0.5 * (next + next.transpose());
    phi = phi * phi;
  }
  return Gramian(w, t);
}

Gramian observability_gramian(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c) {
  if (c.cols() != a.rows()) throw DimensionError("observability_gramian: C has the wrong number of columns");
  return solve_lyapunov(a.transpose(), c.transpose() * c);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd EnergyControl::input(double tau) const {
  const Eigen::MatrixXd phi = (a.transpose() * (horizon - tau)).exp();
  return b.transpose() * (phi * costate);
}

EnergyControl min_energy_input(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double t,
                               const Eigen::VectorXd& x_f) {
  if (x_f.size() != a.rows()) throw DimensionError("min_energy_input: target has the wrong length");
  Gramian w = finite_horizon_gramian(a, b, t);
  const Eigen::VectorXd eig = symmetric_eigenvalues(w.matrix());
  const int rank = numerical_rank(eig, RankPolicy{});
  if (rank < w.n()) {
    throw UncontrollableError("min_energy_input: W(t) has numerical rank " + std::to_string(rank) + " < " +
                                  std::to_string(w.n()),
                              rank);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(w.matrix());
  EnergyControl out;
  out.horizon = t;
  out.target = x_f;
  out.costate = ldlt.solve(x_f);
  // one step of iterative refinement; W can be poorly conditioned near the rank threshold
  out.costate += ldlt.solve(x_f - w.matrix() * out.costate);
  out.energy = x_f.dot(out.costate);
  out.gramian = w.matrix();
  out.a = a;
  out.b = b;
  return out;
}

SimulationResult simulate_min_energy(const EnergyControl& control) {
  const Eigen::MatrixXd& a = control.a;
  const Eigen::MatrixXd& b = control.b;
  const double t = control.horizon;

  auto run = [&](int steps) {
    const double h = t / steps;
    // z(tau) = e^{A^T (t - tau)} costate on the half-step grid, built backwards from tau = t
    const Eigen::MatrixXd half = (a.transpose() * (0.5 * h)).exp();
    std::vector<Eigen::VectorXd> u(2 * steps + 1);
    Eigen::VectorXd z = control.costate;
    for (int i = 2 * steps; i >= 0; --i) {
      u[i] = b.transpose() * z;
      z = half * z;
    }
    Eigen::VectorXd x = Eigen::VectorXd::Zero(a.rows());
    for (int s = 0; s < steps; ++s) {
      const Eigen::VectorXd& u0 = u[2 * s];
      const Eigen::VectorXd& um = u[2 * s + 1];
      const Eigen::VectorXd& u1 = u[2 * s + 2];
      const Eigen::VectorXd k1 = a * x + b * u0;
      const Eigen::VectorXd k2 = a * (x + 0.5 * h * k1) + b * um;
      const Eigen::VectorXd k3 = a * (x + 0.5 * h * k2) + b * um;
      const Eigen::VectorXd k4 = a * (x + h * k3) + b * u1;
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return x;
  };

  int steps = 2000;
  Eigen::VectorXd prev = run(steps);
  while (steps < (1 << 22)) {
    steps *= 2;
    Eigen::VectorXd next = run(steps);
    const double change = (next - prev).norm();
    prev = std::move(next);
    if (change < 1e-9) return {prev, steps};
  }
  throw NumericalError("simulate_min_energy: endpoint did not settle");
}

}  // namespace gramsel

#pragma once

#include "psm/core.hpp"
#include "psm/solvers/report.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace psm {

struct AnalyticOptions {
  /// Above this condition estimate the system counts as singular.
  double max_condition = 1e15;
  int power_iterations = 60;
};

namespace detail {

/// Largest eigenvalue of an SPD matrix by power iteration (deterministic start).
inline double largest_eigenvalue(const Matrix& a, int iters) {
  Vector v = Vector::Ones(a.rows()).normalized();
  double lambda = 0.0;
  for (int i = 0; i < iters; ++i) {
    const Vector w = a * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    lambda = v.dot(w);
    v = w / nw;
  }
  return lambda;
}

/// Smallest eigenvalue via inverse iteration on an existing factorisation.
inline double smallest_eigenvalue(const Eigen::LLT<Matrix>& llt, Index n, int iters) {
  Vector v = Vector::LinSpaced(n, 1.0, 2.0).normalized();
  double mu = 0.0;
  for (int i = 0; i < iters; ++i) {
    const Vector w = llt.solve(v);
    const double nw = w.norm();
    if (!std::isfinite(nw) || nw == 0.0) return 0.0;
    mu = v.dot(w);
    v = w / nw;
  }
  return mu > 0.0 ? 1.0 / mu : 0.0;
}

}  // namespace detail

/// Stationary point of the flow for an affine gradient kk x - 2 rhs: solves
/// kk x = 2 rhs by Cholesky with one refinement step. Singular or indefinite
/// systems fall back to the minimum-norm least-squares solution, reported
/// as non-unique.
inline SolveReport analytic_descent(const Matrix& kk, const Vector& rhs, const AnalyticOptions& opt = {}) {
  detail::Stopwatch clock;
  if (kk.rows() != kk.cols() || kk.rows() != rhs.size()) throw std::invalid_argument("analytic_descent: size mismatch");
  SolveReport rep;
  const Index n = kk.rows();
  const Vector b = 2.0 * rhs;
  if (n == 0) {
    rep.x = Vector();
    rep.converged = true;
    return rep;
  }
  Eigen::LLT<Matrix> llt(kk);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const double lmax = detail::largest_eigenvalue(kk, opt.power_iterations);
    const double lmin = detail::smallest_eigenvalue(llt, n, opt.power_iterations);
    rep.min_eigenvalue = lmin;
    rep.condition_estimate = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    ok = lmin > 0.0 && *rep.condition_estimate < opt.max_condition;
  }
  if (ok) {
    Vector x = llt.solve(b);
    x += llt.solve(Vector(b - kk * x));
    rep.x = std::move(x);
    rep.converged = true;
    rep.message = "cholesky";
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(kk);
    const Vector& ev = eig.eigenvalues();
    const double cut = std::max(ev.cwiseAbs().maxCoeff(), 1e-300) * 1e-13;
    const Matrix& q = eig.eigenvectors();
    Vector coeff = q.transpose() * b;
    for (Index i = 0; i < n; ++i) coeff(i) = ev(i) > cut ? coeff(i) / ev(i) : 0.0;
    rep.x = q * coeff;
    rep.min_eigenvalue = ev(0);
    rep.condition_estimate = ev(0) > 0.0 ? ev(n - 1) / ev(0) : std::numeric_limits<double>::infinity();
    rep.non_unique = true;
    rep.converged = true;
    rep.message = "pseudo-inverse (singular or indefinite normal operator)";
  }
  rep.iterations = 1;
  rep.seconds = clock.seconds();
  return rep;
}

}  // namespace psm

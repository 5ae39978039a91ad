#pragma once

#include "psm/core.hpp"
#include "psm/loss.hpp"
#include "psm/solvers/report.hpp"

#include <Eigen/LU>

#include <cmath>
#include <functional>
#include <sstream>

namespace psm {

struct NewtonOptions {
  /// Stop when |F(x)| <= tol * max(1, |F(x0)|).
  double tol = 1e-12;
  /// Also stop when the Newton step is below step_tol * max(1, |x|).
  double step_tol = 1e-15;
  int max_iters = 50;
  int max_halvings = 30;
  /// Reciprocal condition below which the Jacobian counts as singular.
  double min_rcond = 1e-18;
};

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<Matrix(const Vector&)>;

/// Damped Newton-Raphson for F(x) = 0: full steps, halved while the residual
/// norm would grow.
inline SolveReport newton_raphson(const ResidualFn& f, const JacobianFn& jac, const Vector& x0, const NewtonOptions& opt = {}) {
  detail::Stopwatch clock;
  SolveReport rep;
  Vector x = x0;
  Vector r = f(x);
  double rn = r.norm();
  const double target = opt.tol * std::max(1.0, rn);
  rep.trace.losses.push_back(rn);
  for (int it = 0; it < opt.max_iters; ++it) {
    if (rn <= target) {
      rep.converged = true;
      break;
    }
    const Matrix j = jac(x);
    Eigen::PartialPivLU<Matrix> lu(j);
    const double rc = lu.rcond();
    if (!(rc > opt.min_rcond)) {
      std::ostringstream msg;
      msg << "Newton-Raphson: singular Jacobian (reciprocal condition estimate " << rc << ")";
      rep.message = msg.str();
      rep.condition_estimate = rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
      break;
    }
    rep.condition_estimate = 1.0 / rc;
    Vector dx = -lu.solve(r);
    dx += lu.solve(Vector(-r - j * dx));
    double step = 1.0;
    Vector xn = x + dx;
    Vector rnew = f(xn);
    int h = 0;
    while (!(rnew.norm() <= rn) && h < opt.max_halvings) {
      step *= 0.5;
      xn = x + step * dx;
      rnew = f(xn);
      ++h;
    }
    rep.iterations = it + 1;
    if (!(rnew.norm() <= rn)) {
      rep.message = "Newton-Raphson: no decrease along the Newton direction";
      break;
    }
    const double sn = (xn - x).norm();
    x = xn;
    r = rnew;
    rn = r.norm();
    rep.trace.losses.push_back(rn);
    rep.trace.step_norms.push_back(sn);
    if (rn <= target) {
      rep.converged = true;
      break;
    }
    if (sn <= opt.step_tol * std::max(1.0, x.norm())) {
      rep.converged = true;
      rep.message = "Newton-Raphson: step below tolerance";
      break;
    }
  }
  if (!rep.converged && rep.message.empty()) rep.message = "Newton-Raphson: iteration limit reached";
  rep.x = x;
  rep.final_loss = rn;
  rep.seconds = clock.seconds();
  return rep;
}

/// Newton-Raphson on the stationarity system grad L = 0.
inline SolveReport newton_minimise(const Objective& obj, const Vector& x0, const NewtonOptions& opt = {}) {
  SolveReport rep = newton_raphson(obj.gradient, obj.hessian, x0, opt);
  rep.final_loss = obj.value(rep.x);
  return rep;
}

}  // namespace psm

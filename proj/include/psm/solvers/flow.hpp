#pragma once

#include "psm/core.hpp"
#include "psm/loss.hpp"
#include "psm/solvers/report.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <functional>
#include <limits>

#include <cmath>

namespace psm {

struct FlowOptions {
  double tau = 0.1;
  int max_iters = 10000;
  /// Stop when |x_{n+1} - x_n| <= step_tol * max(1, |x_n|).
  double step_tol = 1e-12;
  /// Or when |grad L| / max(L(x0), tiny) <= grad_tol.
  double grad_tol = 1e-12;
  /// Or when the best loss improved by less than stall_rel * L(x0) over
  /// stall_window consecutive steps (round-off plateau).
  double stall_rel = 1e-15;
  int stall_window = 5;
  int max_halvings = 20;
  int inner_max_iters = 50;
  double inner_tol = 1e-13;
  bool store_iterates = false;
};

namespace detail {

inline bool flow_step_small(const Vector& dx, const Vector& x, double tol) {
  return dx.norm() <= tol * std::max(1.0, x.norm());
}

/// One implicit Euler step y = x - tau grad L(y), computed as the minimiser
/// of phi(y) = |y - x|^2 / 2 + tau L(y) by damped Newton with the matrix
/// I + tau H_gn, refreshed only when progress slows.
inline bool proximal_step(const Objective& obj, const std::function<Matrix(const Vector&)>& curvature, const Vector& x,
                          double tau, const FlowOptions& opt, Vector& y) {
  const Index n = x.size();
  auto phi = [&](const Vector& v) { return 0.5 * (v - x).squaredNorm() + tau * obj.value(v); };
  y = x;
  double fy = phi(y);
  Eigen::LLT<Matrix> llt;
  bool fresh = false;
  bool have = false;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < opt.inner_max_iters; ++k) {
    const Vector g = y - x + tau * obj.gradient(y);
    const double gn = g.norm();
    if (!std::isfinite(gn)) return false;
    if (gn <= opt.inner_tol * std::max(1.0, y.norm())) return true;
    if (have && !fresh && gn > 0.25 * prev) have = false;
    prev = gn;
    if (!have) {
      llt.compute(Matrix(Matrix::Identity(n, n) + tau * curvature(y)));
      if (llt.info() != Eigen::Success) return false;
      have = fresh = true;
    }
    const Vector d = -llt.solve(g);
    const double slope = g.dot(d);
    double t = 1.0;
    double ft = phi(y + d);
    while (!(ft <= fy + 1e-4 * t * slope) && t > 1e-12) {
      t *= 0.5;
      ft = phi(y + t * d);
    }
    if (!(ft <= fy + 1e-4 * t * slope)) {
      if (!fresh) {
        have = false;  // stale factor: rebuild and retry from the same point
        continue;
      }
      // No decrease even with a fresh model: phi is at its minimum up to round-off.
      return k > 0 && ft <= fy * (1.0 + 1e-12);
    }
    const Vector step = t * d;
    y += step;
    fy = ft;
    if (step.norm() <= 1e-14 * std::max(1.0, y.norm())) return true;
    fresh = false;
    if (t < 1.0) have = false;
  }
  return false;
}

}  // namespace detail

/// Implicit Euler discretisation x_{n+1} = x_n - tau grad L(x_{n+1}) of the
/// gradient flow. Affine gradients reduce each step to one solve with the
/// factor of (I + tau H) computed once; otherwise the step equation is solved
/// by a chord-Newton iteration, and tau is halved when it fails or the loss
/// would increase.
inline SolveReport implicit_euler_flow(const Objective& obj, const Vector& x0, const FlowOptions& opt = {}) {
  detail::Stopwatch clock;
  if (!(opt.tau > 0.0)) throw std::invalid_argument("implicit_euler_flow: tau must be positive");
  SolveReport rep;
  Vector x = x0;
  double loss = obj.value(x);
  const double scale = std::max(loss, 1e-300);
  double tau = opt.tau;
  rep.trace.losses.push_back(loss);
  if (opt.store_iterates) rep.trace.iterates.push_back(x);

  double best = loss;
  int stalled = 0;
  auto record = [&](const Vector& xn, double ln, double step) {
    rep.trace.losses.push_back(ln);
    rep.trace.step_norms.push_back(step);
    if (opt.store_iterates) rep.trace.iterates.push_back(xn);
    if (ln < best - opt.stall_rel * scale) {
      best = ln;
      stalled = 0;
    } else {
      best = std::min(best, ln);
      ++stalled;
    }
  };
  auto done = [&](const Vector& dx) {
    return detail::flow_step_small(dx, x, opt.step_tol) || obj.gradient(x).norm() / scale <= opt.grad_tol ||
           stalled >= opt.stall_window;
  };

  const Index n = x.size();
  if (obj.affine) {
    const Matrix h = obj.hessian(x);
    const Vector g0 = obj.gradient(Vector::Zero(n));  // = -2 rhs
    Eigen::LLT<Matrix> llt(Matrix(Matrix::Identity(n, n) + tau * h));
    if (llt.info() != Eigen::Success) throw NumericalError("implicit_euler_flow: step matrix is not positive definite");
    for (int it = 0; it < opt.max_iters; ++it) {
      const Vector b = x - tau * g0;
      Vector xn = llt.solve(b);
      xn += llt.solve(Vector(b - xn - tau * (h * xn)));
      const Vector dx = xn - x;
      x = xn;
      loss = obj.value(x);
      record(x, loss, dx.norm());
      rep.iterations = it + 1;
      if (done(dx)) {
        rep.converged = true;
        break;
      }
    }
  } else {
    const auto curvature = obj.gauss_newton ? obj.gauss_newton : obj.hessian;
    int halvings = 0;
    for (int it = 0; it < opt.max_iters; ++it) {
      Vector xn;
      double ln = loss;
      while (true) {
        if (detail::proximal_step(obj, curvature, x, tau, opt, xn)) {
          ln = obj.value(xn);
          if (std::isfinite(ln) && ln <= loss * (1.0 + 1e-12) + 1e-300) break;
        }
        if (++halvings > opt.max_halvings) {
          rep.x = x;
          rep.final_loss = loss;
          rep.trace.tau = tau;
          rep.trace.halvings = halvings - 1;
          rep.message = "implicit Euler: step failed after " + std::to_string(opt.max_halvings) + " halvings of tau";
          rep.seconds = clock.seconds();
          return rep;
        }
        tau *= 0.5;
      }
      const Vector dx = xn - x;
      x = xn;
      loss = ln;
      record(x, loss, dx.norm());
      rep.iterations = it + 1;
      if (done(dx)) {
        rep.converged = true;
        break;
      }
    }
    rep.trace.halvings = halvings;
  }
  rep.x = x;
  rep.final_loss = loss;
  rep.trace.tau = tau;
  if (!rep.converged) rep.message = "implicit Euler: iteration limit reached";
  rep.seconds = clock.seconds();
  return rep;
}

}  // namespace psm

#pragma once

#include "psm/core.hpp"
#include "psm/loss.hpp"
#include "psm/solvers/report.hpp"

#include <cmath>
#include <deque>
#include <functional>
#include <optional>

namespace psm {

struct LbfgsOptions {
  int memory = 10;
  int max_iters = 20000;
  /// Stop when |grad| <= grad_tol * max(1, L(x0)).
  double grad_tol = 1e-12;
  /// Or when the relative loss decrease over an iteration falls below this.
  double loss_tol = 0.0;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
  bool record_trace = true;
  /// Initial inverse-Hessian model H0 g; scaled identity when empty.
  std::function<Vector(const Vector&)> preconditioner;
};

namespace detail {

struct LinePoint {
  double t;
  double f;
  double dg;  ///< directional derivative
  Vector x;
  Vector g;
};

/// Cubic interpolation minimiser on [lo, hi] with bisection safeguard.
inline double cubic_step(const LinePoint& a, const LinePoint& b) {
  const double d1 = a.dg + b.dg - 3.0 * (a.f - b.f) / (a.t - b.t);
  const double disc = d1 * d1 - a.dg * b.dg;
  double t = 0.5 * (a.t + b.t);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.t - a.t);
    const double c = b.t - (b.t - a.t) * (b.dg + d2 - d1) / (b.dg - a.dg + 2.0 * d2);
    if (std::isfinite(c)) t = c;
  }
  const double lo = std::min(a.t, b.t);
  const double hi = std::max(a.t, b.t);
  const double margin = 0.1 * (hi - lo);
  if (!(t > lo + margin && t < hi - margin)) t = 0.5 * (lo + hi);
  return t;
}

}  // namespace detail

/// Limited-memory BFGS with a strong Wolfe line search.
inline SolveReport quasi_newton_minimise(const Objective& obj, const Vector& x0, const LbfgsOptions& opt = {}) {
  detail::Stopwatch clock;
  SolveReport rep;
  Vector x = x0;
  double f = obj.value(x);
  Vector g = obj.gradient(x);
  const double gtol = opt.grad_tol * std::max(1.0, f);
  std::deque<Vector> s_hist;
  std::deque<Vector> y_hist;
  std::deque<double> rho_hist;
  if (opt.record_trace) rep.trace.losses.push_back(f);

  auto eval = [&](const Vector& xt, double t, const Vector& d) {
    detail::LinePoint p{t, obj.value(xt), 0.0, xt, obj.gradient(xt)};
    p.dg = p.g.dot(d);
    return p;
  };

  for (int it = 0; it < opt.max_iters; ++it) {
    if (g.norm() <= gtol) {
      rep.converged = true;
      break;
    }
    // Two-loop recursion.
    Vector q = g;
    const std::size_t k = s_hist.size();
    std::vector<double> alpha(k);
    for (std::size_t i = k; i-- > 0;) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    Vector d;
    if (opt.preconditioner) {
      d = opt.preconditioner(q);
    } else {
      double gamma = 1.0;
      if (k > 0) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      else gamma = 1.0 / std::max(1.0, g.norm());
      d = gamma * q;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }
    d = -d;
    double dg0 = g.dot(d);
    if (!(dg0 < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g / std::max(1.0, g.norm());
      dg0 = g.dot(d);
    }

    // Strong Wolfe line search (bracketing then zoom).
    const detail::LinePoint p0{0.0, f, dg0, x, g};
    detail::LinePoint prev = p0;
    std::optional<detail::LinePoint> found;
    double t = 1.0;
    int evals = 0;
    // Near the minimiser f stops resolving the Armijo test while the gradient
    // is still accurate, so accept on the slope alone once f is flat.
    auto approx_wolfe = [&](const detail::LinePoint& p) {
      return std::isfinite(p.f) && p.f <= f + 1e-10 * std::abs(f) && p.dg >= opt.c2 * dg0 &&
             p.dg <= (2.0 * opt.c1 - 1.0) * dg0;
    };
    auto zoom = [&](detail::LinePoint lo, detail::LinePoint hi) -> std::optional<detail::LinePoint> {
      while (evals < opt.max_line_search) {
        const double tj = detail::cubic_step(lo, hi);
        auto pj = eval(x + tj * d, tj, d);
        ++evals;
        if (approx_wolfe(pj)) return pj;
        if (!std::isfinite(pj.f) || pj.f > f + opt.c1 * tj * dg0 || pj.f >= lo.f) {
          hi = std::move(pj);
        } else {
          if (std::abs(pj.dg) <= -opt.c2 * dg0) return pj;
          if (pj.dg * (hi.t - lo.t) >= 0.0) hi = lo;
          lo = std::move(pj);
        }
        if (std::abs(hi.t - lo.t) <= 1e-16 * std::max(1.0, hi.t)) return lo.t > 0.0 ? std::optional(lo) : std::nullopt;
      }
      return lo.t > 0.0 && lo.f < f ? std::optional(lo) : std::nullopt;
    };
    while (evals < opt.max_line_search) {
      auto pt = eval(x + t * d, t, d);
      ++evals;
      if (approx_wolfe(pt)) {
        found = std::move(pt);
        break;
      }
      if (!std::isfinite(pt.f) || pt.f > f + opt.c1 * t * dg0 || (evals > 1 && pt.f >= prev.f)) {
        if (!std::isfinite(pt.f)) {
          t *= 0.5;
          continue;
        }
        found = zoom(prev, pt);
        break;
      }
      if (std::abs(pt.dg) <= -opt.c2 * dg0) {
        found = std::move(pt);
        break;
      }
      if (pt.dg >= 0.0) {
        found = zoom(pt, prev);
        break;
      }
      prev = std::move(pt);
      t *= 2.0;
    }
    if (!found) {
      rep.message = "quasi-Newton: line search failed; returning best iterate";
      break;
    }
    const Vector s = found->x - x;
    const Vector y = found->g - g;
    const double sy = s.dot(y);
    const double fprev = f;
    x = found->x;
    f = found->f;
    g = found->g;
    rep.iterations = it + 1;
    if (opt.record_trace) {
      rep.trace.losses.push_back(f);
      rep.trace.step_norms.push_back(s.norm());
    }
    if (sy > 1e-300 * std::max(1.0, y.squaredNorm()) && sy > 0.0) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (opt.loss_tol > 0.0 && fprev - f <= opt.loss_tol * std::max(fprev, 1e-300)) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged && rep.message.empty()) {
    if (g.norm() <= gtol) rep.converged = true;
    else rep.message = "quasi-Newton: iteration limit reached";
  }
  rep.x = x;
  rep.final_loss = f;
  rep.seconds = clock.seconds();
  return rep;
}

}  // namespace psm

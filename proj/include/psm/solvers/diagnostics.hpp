#pragma once

#include "psm/core.hpp"
#include "psm/solvers/report.hpp"

#include <cmath>
#include <vector>

namespace psm {

struct RateReport {
  /// -(slope of log gap against time n * tau); 0 for a converged trace.
  double fitted_rate = 0.0;
  /// 2 lambda_hat with lambda_hat = log(1 + lambda tau) / tau.
  double theoretical_rate = 0.0;
  double lambda_hat = 0.0;
  /// (1 + lambda tau)^-2 and the largest observed gap ratio.
  double factor_bound = 1.0;
  double max_factor = 0.0;
  int factor_violations = 0;
  int monotonicity_violations = 0;
  int lower_bound_violations = 0;
  int points_used = 0;
  bool rate_valid = false;
};

struct DiagnosticsOptions {
  /// Ratios are only checked while the gap is above rel_floor * gap_0, where
  /// round-off dominates otherwise.
  double rel_floor = 1e-8;
  double slack = 1e-9;
};

/// Checks a gradient-flow loss trace against the exponential-decay bounds of
/// implicit Euler on a lambda-convex loss with minimum loss_inf.
inline RateReport convergence_diagnostics(const FlowTrace& trace, double lambda, double loss_inf,
                                          const Vector* x_inf = nullptr, const DiagnosticsOptions& opt = {}) {
  RateReport rep;
  const double tau = trace.tau;
  if (tau > 0.0) {
    rep.lambda_hat = std::log1p(lambda * tau) / tau;
    rep.factor_bound = 1.0 / ((1.0 + lambda * tau) * (1.0 + lambda * tau));
  }
  rep.theoretical_rate = 2.0 * rep.lambda_hat;
  const auto& l = trace.losses;
  for (std::size_t i = 1; i < l.size(); ++i) {
    if (l[i] > l[i - 1] * (1.0 + opt.slack) + 1e-300) ++rep.monotonicity_violations;
  }
  if (l.empty()) return rep;
  const double gap0 = l[0] - loss_inf;
  const double floor = opt.rel_floor * std::abs(gap0);
  std::vector<double> ts;
  std::vector<double> logs;
  for (std::size_t i = 0; i < l.size(); ++i) {
    const double gap = l[i] - loss_inf;
    if (!(gap > floor) || gap <= 0.0) break;
    ts.push_back(static_cast<double>(i) * tau);
    logs.push_back(std::log(gap));
    if (i > 0) {
      const double f = gap / (l[i - 1] - loss_inf);
      rep.max_factor = std::max(rep.max_factor, f);
      if (f > rep.factor_bound * (1.0 + opt.slack)) ++rep.factor_violations;
    }
  }
  if (x_inf) {
    for (std::size_t i = 0; i < trace.iterates.size() && i < l.size(); ++i) {
      const double lower = 0.5 * lambda * (trace.iterates[i] - *x_inf).squaredNorm();
      const double gap = l[i] - loss_inf;
      if (lower > gap + opt.slack * std::max(std::abs(gap0), 1e-300)) ++rep.lower_bound_violations;
    }
  }
  rep.points_used = static_cast<int>(ts.size());
  if (ts.size() >= 2 && rep.monotonicity_violations == 0) {
    double mt = 0.0;
    double ml = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      mt += ts[i];
      ml += logs[i];
    }
    mt /= static_cast<double>(ts.size());
    ml /= static_cast<double>(ts.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      sxy += (ts[i] - mt) * (logs[i] - ml);
      sxx += (ts[i] - mt) * (ts[i] - mt);
    }
    rep.fitted_rate = sxx > 0.0 ? -sxy / sxx : 0.0;
    rep.rate_valid = true;
  } else if (rep.monotonicity_violations == 0) {
    rep.rate_valid = true;  // constant or already converged
  }
  return rep;
}

}  // namespace psm

#pragma once

#include "psm/core.hpp"
#include "psm/operators.hpp"
#include "psm/weights.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace psm {

/// Discrete H^k inner product on grid values. k < 0 gives the dual norms;
/// the starred variant swaps D^* D for D D^* in the embedding sum.
class SobolevMetric {
 public:
  SobolevMetric(std::shared_ptr<const OperatorCache> ops, int k, SobolevVariant variant = SobolevVariant::Plain)
      : ops_(std::move(ops)), k_(k), variant_(variant), weight_(ops_->sobolev_weight(k, variant)) {}

  int order() const { return k_; }
  SobolevVariant variant() const { return variant_; }
  const OperatorCache& operators() const { return *ops_; }
  const WeightPtr& weight() const { return weight_; }
  Index size() const { return ops_->size(); }

  double inner(const Vector& f, const Vector& g) const {
    check(f);
    check(g);
    return f.dot(weight_->apply(g));
  }

  double norm(const Vector& f) const {
    const double q = inner(f, f);
    if (q < -1e-12 * std::max(1.0, f.squaredNorm())) throw NumericalError("SobolevMetric::norm: weight is not positive semidefinite");
    return std::sqrt(std::max(q, 0.0));
  }

 private:
  void check(const Vector& v) const {
    if (v.size() != size()) throw std::invalid_argument("SobolevMetric: vector length does not match grid");
  }

  std::shared_ptr<const OperatorCache> ops_;
  int k_;
  SobolevVariant variant_;
  WeightPtr weight_;
};

/// sum_alpha <f, D_beta L_alpha>^2 / w_alpha, i.e. |D_beta^* f|^2 in L^2.
inline double dual_testfunction_form(const OperatorCache& ops, const Vector& f, const MultiIndex& beta) {
  if (f.size() != ops.size()) throw std::invalid_argument("dual_testfunction_form: vector length does not match grid");
  const Vector& w = ops.weights();
  const Vector pairings = ops.diff_operator(beta).transpose().apply(Vector(w.cwiseProduct(f)));
  return pairings.cwiseAbs2().cwiseQuotient(w).sum();
}

inline SobolevVariant variant_from_string(const std::string& s) {
  if (s == "plain") return SobolevVariant::Plain;
  if (s == "starred" || s == "star") return SobolevVariant::Starred;
  throw std::invalid_argument("unknown Sobolev variant '" + s + "'");
}

inline std::string to_string(SobolevVariant v) { return v == SobolevVariant::Plain ? "plain" : "starred"; }

}  // namespace psm

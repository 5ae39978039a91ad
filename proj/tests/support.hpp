#pragma once
// Small helpers shared by the test programs.

#include "psm/loss.hpp"
#include "psm/problems.hpp"

#include <random>

namespace testing_support {

using psm::Index;
using psm::Vector;

inline Vector random_vector(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

/// State vector holding the ground-truth grid values and parameter values.
inline Vector truth_state(const psm::ProblemSpec& p, const psm::AssembledLoss& loss) {
  Vector x = Vector::Zero(loss.size());
  const auto& layout = loss.layout();
  const auto& pts = loss.operators().grid().points();
  for (int f = 0; f < static_cast<int>(p.fields.size()); ++f) {
    if (!layout.field_unknown(f)) continue;
    x.segment(layout.field_offset(f), layout.grid_size()) = psm::sample(p.ground_truth.at(p.fields[f].name), pts);
  }
  for (int q = 0; q < static_cast<int>(p.params.size()); ++q) {
    if (layout.param_unknown(q)) x(layout.param_offset(q)) = p.param_truth.at(p.params[q].name);
  }
  return x;
}

/// -Laplacian(u) = f on [-1,1]^2 with a polynomial solution of degree 3 per axis.
inline psm::ProblemSpec polynomial_poisson2d(double scale = 1.0) {
  psm::ProblemSpec p;
  p.name = "poly-poisson";
  p.m = 2;
  p.box = psm::cube(2, -1.0, 1.0);
  psm::Field u = [scale](std::span<const double> x) {
    return scale * (x[0] * x[0] * x[1] + x[1] * x[1] * x[1] - 0.5 * x[0] + 0.25);
  };
  psm::Field f = [scale](std::span<const double> x) { return -scale * (2.0 * x[1] + 6.0 * x[1]); };
  p.fields.push_back(psm::FieldDecl{"u", true, {}});
  p.equations.push_back(psm::Equation{"poisson", psm::detail::negative_laplacian(2, 0), {psm::SourceTerm{f, -1.0, -1}}, {}, false});
  p.boundary.push_back(psm::DirichletCondition{0, u});
  p.ground_truth["u"] = u;
  return p;
}

/// -u'' = pi^2 sin(pi x) on (-1, 1) with u(+-1) = 0.
inline psm::ProblemSpec poisson1d_sine() {
  constexpr double pi = std::numbers::pi;
  psm::ProblemSpec p;
  p.name = "poisson1d";
  p.m = 1;
  p.box = psm::cube(1, -1.0, 1.0);
  psm::Field u = [](std::span<const double> x) { return std::sin(pi * x[0]); };
  psm::Field f = [](std::span<const double> x) { return pi * pi * std::sin(pi * x[0]); };
  p.fields.push_back(psm::FieldDecl{"u", true, {}});
  p.equations.push_back(psm::Equation{"poisson", psm::detail::negative_laplacian(1, 0), {psm::SourceTerm{f, -1.0, -1}}, {}, false});
  p.boundary.push_back(psm::DirichletCondition{0, u});
  p.ground_truth["u"] = u;
  return p;
}

}  // namespace testing_support

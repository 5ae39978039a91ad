#pragma once

#include "psm/basis.hpp"
#include "psm/core.hpp"
#include "psm/problem.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace psm {

namespace detail {

inline MultiIndex beta2(int a, int b) { return MultiIndex{a, b}; }

inline MultiIndex unit_beta(int m, int axis, int order) {
  MultiIndex b(static_cast<std::size_t>(m), 0);
  b[static_cast<std::size_t>(axis)] = order;
  return b;
}

/// -sum_i d^2/dx_i^2 field, scaled.
inline std::vector<LinearTerm> negative_laplacian(int m, int field, double scale = 1.0, int param = -1) {
  std::vector<LinearTerm> t;
  for (int i = 0; i < m; ++i) t.push_back(LinearTerm{field, unit_beta(m, i, 2), {}, -scale, param});
  return t;
}

}  // namespace detail

/// Physicists' Hermite polynomial by the three-term recurrence.
inline double hermite(int n, double x) {
  if (n < 0) throw std::invalid_argument("hermite: negative degree");
  double h0 = 1.0;
  if (n == 0) return h0;
  double h1 = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// Harmonic-oscillator eigenfunction with the normalisation
/// pi^{-1/4} / sqrt(2^{n1+n2} n1! n2!).
inline double qho_eigenfunction(int n1, int n2, double x, double y) {
  const double lognorm = -0.25 * std::log(std::numbers::pi) -
                         0.5 * ((n1 + n2) * std::log(2.0) + std::lgamma(n1 + 1.0) + std::lgamma(n2 + 1.0));
  return std::exp(lognorm - 0.5 * (x * x + y * y)) * hermite(n1, x) * hermite(n2, y);
}

/// Product ansatz C (A sin(w x) + tanh(b x)) (A sin(w y) + tanh(b y)) and its pieces.
struct HardTransition {
  double c = 0.1;
  double a = 0.1;
  double beta = 5.0;
  double omega = 10.0 * std::numbers::pi;

  double factor(double t) const { return a * std::sin(omega * t) + std::tanh(beta * t); }
  double factor_dd(double t) const {
    const double th = std::tanh(beta * t);
    const double sech2 = 1.0 - th * th;
    return -a * omega * omega * std::sin(omega * t) - 2.0 * beta * beta * th * sech2;
  }
  double u(double x, double y) const { return c * factor(x) * factor(y); }
  double laplacian(double x, double y) const { return c * (factor(y) * factor_dd(x) + factor(x) * factor_dd(y)); }
};

inline ProblemSpec poisson2d_hard() {
  const HardTransition h;
  ProblemSpec p;
  p.name = "poisson2d-hard";
  p.m = 2;
  p.box = cube(2, -1.0, 1.0);
  Field u = [h](std::span<const double> x) { return h.u(x[0], x[1]); };
  // The rhs is -Laplacian(u), so that -Laplacian(u) - f = 0.
  Field f = [h](std::span<const double> x) { return -h.laplacian(x[0], x[1]); };
  p.fields.push_back(FieldDecl{"u", true, {}});
  Equation eq{"poisson", detail::negative_laplacian(2, 0), {SourceTerm{f, -1.0, -1}}, {}, false};
  p.equations.push_back(eq);
  p.boundary.push_back(DirichletCondition{0, u});
  p.ground_truth["u"] = u;
  return p;
}

inline ProblemSpec poisson4d(double omega = 1.0) {
  ProblemSpec p;
  p.name = "poisson4d";
  p.m = 4;
  p.box = cube(4, -1.0, 1.0);
  Field g = [omega](std::span<const double> x) {
    return std::sin(omega * x[0]) * std::cos(omega * x[1]) * std::sin(omega * x[2]) * std::cos(omega * x[3]);
  };
  Field f = [g, omega](std::span<const double> x) { return 4.0 * omega * omega * g(x); };
  p.fields.push_back(FieldDecl{"u", true, {}});
  p.equations.push_back(Equation{"poisson", detail::negative_laplacian(4, 0), {SourceTerm{f, -1.0, -1}}, {}, false});
  p.boundary.push_back(DirichletCondition{0, g});
  p.ground_truth["u"] = g;
  return p;
}

/// -Laplacian(u) - mu cos(pi x) sin(pi y) = 0 with u observed on the grid
/// and on the boundary; mu starts at 0.
inline ProblemSpec poisson2d_inverse() {
  constexpr double pi = std::numbers::pi;
  ProblemSpec p;
  p.name = "poisson2d-inverse";
  p.m = 2;
  p.box = cube(2, -1.0, 1.0);
  Field f = [](std::span<const double> x) { return std::cos(pi * x[0]) * std::sin(pi * x[1]); };
  Field g = f;
  p.fields.push_back(FieldDecl{"u", true, {}});
  p.params.push_back(ParamDecl{"mu", true, 0.0});
  p.equations.push_back(Equation{"poisson", detail::negative_laplacian(2, 0), {SourceTerm{f, -1.0, 0}}, {}, false});
  p.boundary.push_back(DirichletCondition{0, g});
  p.data.push_back(DataTerm{0, g});
  p.ground_truth["u"] = g;
  p.param_truth["mu"] = 2.0 * pi * pi;
  return p;
}

/// 1/2 (-Laplacian(u) + |x|^2 u) - mu u = 0 with Dirichlet data from the
/// eigenfunction of quantum numbers (n1, n2), mu = n1 + n2 + 1.
inline ProblemSpec qho_forward(int n1, int n2, const Box& box) {
  if (n1 < 0 || n2 < 0) throw std::invalid_argument("qho_forward: quantum numbers must be non-negative");
  ProblemSpec p;
  p.name = "qho";
  p.m = 2;
  p.box = box;
  validate_box(box);
  const double mu = n1 + n2 + 1.0;
  Field g = [n1, n2](std::span<const double> x) { return qho_eigenfunction(n1, n2, x[0], x[1]); };
  Field v = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
  p.fields.push_back(FieldDecl{"u", true, {}});
  p.params.push_back(ParamDecl{"mu", false, mu});
  Equation eq{"schroedinger", detail::negative_laplacian(2, 0, 0.5), {}, {}, false};
  eq.linear.push_back(LinearTerm{0, MultiIndex{0, 0}, v, 0.5, -1});
  eq.linear.push_back(LinearTerm{0, MultiIndex{0, 0}, {}, -1.0, 0});
  p.equations.push_back(eq);
  p.boundary.push_back(DirichletCondition{0, g});
  p.ground_truth["u"] = g;
  p.param_truth["mu"] = mu;
  p.notes["quantum_numbers"] = std::to_string(n1) + "," + std::to_string(n2);
  return p;
}

/// Eigenvalue mu = n1 + n2 + 1 with the symmetric split n1 = n2.
inline ProblemSpec qho_forward(double mu, const Box& box) {
  const double half = (mu - 1.0) / 2.0;
  if (mu < 1.0 || half != std::floor(half)) {
    throw std::invalid_argument("qho_forward: mu must be n1 + n2 + 1 with n1 = n2 for the built-in split");
  }
  return qho_forward(static_cast<int>(half), static_cast<int>(half), box);
}

inline ProblemSpec qho21() {
  ProblemSpec p = qho_forward(10, 10, cube(2, -5.3, 5.3));
  p.name = "qho21";
  return p;
}

inline ProblemSpec qho31() {
  ProblemSpec p = qho_forward(15, 15, cube(2, -1.0, 1.0));
  p.name = "qho31";
  return p;
}

/// Eigenvalue recovery at mu_gt = 9 (n1 = n2 = 4) from eigenfunction samples.
inline ProblemSpec qho_inverse() {
  ProblemSpec p = qho_forward(4, 4, cube(2, -5.3, 5.3));
  p.name = "qho-inverse";
  p.params[0].unknown = true;
  p.params[0].value = 0.0;
  p.data.push_back(DataTerm{0, p.ground_truth["u"]});
  return p;
}

/// Exact Navier-Stokes solution used by both NS problems.
struct NavierStokesSolution {
  double nu = 0.05;
  static constexpr double pi = std::numbers::pi;
  double u1(double x, double y) const { return -std::sin(pi * x) * std::cos(pi * y); }
  double u2(double x, double y) const { return std::cos(pi * x) * std::sin(pi * y); }
  double p(double x, double y) const { return x * std::exp(pi * y); }
  double f1(double x, double y) const {
    const double a = u1(x, y);
    const double b = u2(x, y);
    return 2.0 * nu * pi * pi * a - pi * std::cos(pi * x) * std::cos(pi * y) * a + pi * std::sin(pi * x) * std::sin(pi * y) * b +
           std::exp(pi * y);
  }
  double f2(double x, double y) const {
    const double a = u1(x, y);
    const double b = u2(x, y);
    return 2.0 * nu * pi * pi * b + pi * std::cos(pi * x) * std::cos(pi * y) * b - pi * std::sin(pi * x) * std::sin(pi * y) * a +
           pi * x * std::exp(pi * y);
  }
};

namespace detail {

/// Momentum equations -nu Laplacian(u) + (u . grad) u + grad p - f, the
/// divergence constraint, and the pressure pin. With unknown_nu the viscosity
/// is parameter 0.
inline void navier_stokes_equations(ProblemSpec& p, const NavierStokesSolution& s, bool unknown_nu) {
  const int u1 = 0;
  const int u2 = 1;
  const int pr = 2;
  const double nu_scale = unknown_nu ? 1.0 : s.nu;
  const int nu_param = unknown_nu ? 0 : -1;
  Field f1 = [s](std::span<const double> x) { return s.f1(x[0], x[1]); };
  Field f2 = [s](std::span<const double> x) { return s.f2(x[0], x[1]); };
  const MultiIndex zero{0, 0};
  const MultiIndex dx{1, 0};
  const MultiIndex dy{0, 1};
  for (int c = 0; c < 2; ++c) {
    const int uc = c == 0 ? u1 : u2;
    Equation eq;
    eq.name = c == 0 ? "momentum-x" : "momentum-y";
    eq.linear = negative_laplacian(2, uc, nu_scale, nu_param);
    eq.linear.push_back(LinearTerm{pr, c == 0 ? dx : dy, {}, 1.0, -1});
    eq.sources.push_back(SourceTerm{c == 0 ? f1 : f2, -1.0, -1});
    eq.products.push_back(ProductTerm{u1, zero, uc, dx, 1.0});
    eq.products.push_back(ProductTerm{u2, zero, uc, dy, 1.0});
    p.equations.push_back(eq);
  }
  Equation div{"divergence", {LinearTerm{u1, dx, {}, 1.0, -1}, LinearTerm{u2, dy, {}, 1.0, -1}}, {}, {}, true};
  p.equations.push_back(div);
  p.pins.push_back(PinTerm{pr, p.ground_truth["p"]});
}

}  // namespace detail

inline ProblemSpec navier_stokes_forward() {
  const NavierStokesSolution s;
  ProblemSpec p;
  p.name = "ns-forward";
  p.m = 2;
  p.box = cube(2, -1.0, 1.0);
  Field u1 = [s](std::span<const double> x) { return s.u1(x[0], x[1]); };
  Field u2 = [s](std::span<const double> x) { return s.u2(x[0], x[1]); };
  Field pr = [s](std::span<const double> x) { return s.p(x[0], x[1]); };
  p.fields = {FieldDecl{"u1", true, {}}, FieldDecl{"u2", true, {}}, FieldDecl{"p", true, {}}};
  p.ground_truth = {{"u1", u1}, {"u2", u2}, {"p", pr}};
  detail::navier_stokes_equations(p, s, false);
  p.boundary = {DirichletCondition{0, u1}, DirichletCondition{1, u2}};
  p.param_truth["nu"] = s.nu;
  return p;
}

/// Velocity is observed; pressure and viscosity are unknown. The divergence
/// constraint involves only known fields and is dropped.
inline ProblemSpec navier_stokes_inverse() {
  const NavierStokesSolution s;
  ProblemSpec p;
  p.name = "ns-inverse";
  p.m = 2;
  p.box = cube(2, -1.0, 1.0);
  Field u1 = [s](std::span<const double> x) { return s.u1(x[0], x[1]); };
  Field u2 = [s](std::span<const double> x) { return s.u2(x[0], x[1]); };
  Field pr = [s](std::span<const double> x) { return s.p(x[0], x[1]); };
  p.fields = {FieldDecl{"u1", false, u1}, FieldDecl{"u2", false, u2}, FieldDecl{"p", true, {}}};
  p.params.push_back(ParamDecl{"nu", true, 0.0});
  p.ground_truth = {{"u1", u1}, {"u2", u2}, {"p", pr}};
  detail::navier_stokes_equations(p, s, true);
  p.equations.pop_back();
  p.param_truth["nu"] = s.nu;
  return p;
}

inline const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names{"poisson2d-hard", "poisson4d", "poisson2d-inverse", "qho21",
                                              "qho31",          "qho-inverse", "ns-forward",       "ns-inverse"};
  return names;
}

inline ProblemSpec make_problem(const std::string& name) {
  if (name == "poisson2d-hard") return poisson2d_hard();
  if (name == "poisson4d") return poisson4d();
  if (name == "poisson2d-inverse") return poisson2d_inverse();
  if (name == "qho21") return qho21();
  if (name == "qho31") return qho31();
  if (name == "qho-inverse") return qho_inverse();
  if (name == "ns-forward") return navier_stokes_forward();
  if (name == "ns-inverse") return navier_stokes_inverse();
  std::string msg = "unknown problem '" + name + "'; valid names:";
  for (const auto& n : problem_names()) msg += " " + n;
  throw std::invalid_argument(msg);
}

/// Solver, degrees and metric each built-in runs with unless overridden.
struct ProblemDefaults {
  std::string solver;
  int n_domain;
  int n_boundary;
  std::string pde_norm;
  double tau = 0.1;
};

inline ProblemDefaults problem_defaults(const std::string& name) {
  if (name == "poisson2d-hard") return {"ad", 50, 100, "h-1-star"};
  if (name == "poisson4d") return {"ad", 8, 8, "h-1-star"};
  if (name == "poisson2d-inverse") return {"gf-implicit-euler", 30, 100, "l2", 1e4};
  if (name == "qho21") return {"ad", 30, 100, "h-1-star"};
  if (name == "qho31") return {"ad", 50, 200, "h-1-star"};
  if (name == "qho-inverse") return {"gf-implicit-euler", 50, 200, "l2", 1e4};
  if (name == "ns-forward") return {"quasi-newton", 30, 100, "h-1-star"};
  if (name == "ns-inverse") return {"newton", 30, 100, "h-1-star"};
  (void)make_problem(name);  // throws with the list of valid names
  return {};
}

struct ErrorMetrics {
  double eps1 = 0.0;
  double eps_inf = 0.0;
  std::size_t n = 0;
};

/// Uniform points (endpoints included) per axis for the error grid.
inline int default_eval_points_per_axis(int m) {
  if (m <= 2) return 100;
  if (m == 3) return 40;
  return 20;
}

/// Mean and max absolute error on a uniform tensor grid with `per_axis`
/// points along each axis of the surrogate's box.
inline ErrorMetrics evaluate_errors(const Surrogate& s, const Field& truth, int per_axis) {
  if (per_axis < 1) throw std::invalid_argument("evaluate_errors: need at least one point per axis");
  std::vector<Vector> axes;
  for (const auto& iv : s.box) {
    axes.push_back(per_axis == 1 ? Vector(Vector::Constant(1, 0.5 * (iv.lo + iv.hi))) : Vector(Vector::LinSpaced(per_axis, iv.lo, iv.hi)));
  }
  const Vector vals = s.evaluate_tensor(axes);
  ErrorMetrics e;
  e.n = static_cast<std::size_t>(vals.size());
  std::vector<double> x(static_cast<std::size_t>(s.m));
  double sum = 0.0;
  for (Index p = 0; p < vals.size(); ++p) {
    Index rem = p;
    for (int i = 0; i < s.m; ++i) {
      x[static_cast<std::size_t>(i)] = axes[static_cast<std::size_t>(i)](rem % per_axis);
      rem /= per_axis;
    }
    const double err = std::abs(vals(p) - truth(std::span<const double>(x)));
    sum += err;
    e.eps_inf = std::max(e.eps_inf, err);
  }
  e.eps1 = sum / static_cast<double>(e.n);
  return e;
}

}  // namespace psm

#pragma once

#include "psm/core.hpp"
#include "psm/grid.hpp"
#include "psm/kron.hpp"

#include <Eigen/LU>

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace psm {

/// T_k(x). Uses cos(k arccos x) on [-1, 1] and the three-term recurrence outside.
inline double chebyshev_t(int k, double x) {
  if (k < 0) throw std::invalid_argument("chebyshev_t: negative degree");
  if (std::abs(x) <= 1.0) return std::cos(k * std::acos(x));
  double t_prev = 1.0;
  if (k == 0) return t_prev;
  double t = x;
  for (int j = 1; j < k; ++j) {
    const double next = 2.0 * x * t - t_prev;
    t_prev = t;
    t = next;
  }
  return t;
}

/// Product Chebyshev polynomial T_alpha at a physical point x of the box.
/// Points outside the box extrapolate; accuracy there is not controlled.
inline double chebyshev_eval(const MultiIndex& alpha, const Box& box, std::span<const double> x) {
  if (alpha.size() != box.size() || x.size() != box.size()) {
    throw std::invalid_argument("chebyshev_eval: dimension mismatch");
  }
  double v = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) v *= chebyshev_t(alpha[i], box[i].to_reference(x[i]));
  return v;
}

/// Barycentric Lagrange basis on the (mapped) Legendre nodes of one axis.
class LagrangeBasis1D {
 public:
  LagrangeBasis1D(const LegendreRule1D& rule, const Interval& iv) : interval_(iv) {
    const Index count = rule.nodes.size();
    nodes_.resize(count);
    bary_.resize(count);
    for (Index j = 0; j < count; ++j) {
      const double t = rule.nodes(j);
      nodes_(j) = iv.from_reference(t);
      const double sign = ((count - 1 - j) % 2 == 0) ? 1.0 : -1.0;
      bary_(j) = sign * std::sqrt((1.0 - t * t) * rule.weights(j));
    }
  }

  Index size() const { return nodes_.size(); }
  const Vector& nodes() const { return nodes_; }
  const Vector& barycentric_weights() const { return bary_; }
  const Interval& interval() const { return interval_; }

  /// Values of all cardinal functions l_0..l_n at x.
  Vector row(double x) const {
    Vector r(size());
    for (Index j = 0; j < size(); ++j) {
      if (x == nodes_(j)) {
        r.setZero();
        r(j) = 1.0;
        return r;
      }
      r(j) = bary_(j) / (x - nodes_(j));
    }
    return r / r.sum();
  }

  double cardinal(int j, double x) const { return row(x)(j); }

  /// Rows are cardinal values at each target point.
  Matrix interpolation_matrix(const Vector& targets) const {
    Matrix e(targets.size(), size());
    for (Index i = 0; i < targets.size(); ++i) e.row(i) = row(targets(i)).transpose();
    return e;
  }

  /// D(i, j) = l_j'(x_i): maps nodal values to nodal derivative values.
  Matrix differentiation_matrix() const {
    const Index count = size();
    Matrix d = Matrix::Zero(count, count);
    for (Index i = 0; i < count; ++i) {
      double diag = 0.0;
      for (Index j = 0; j < count; ++j) {
        if (i == j) continue;
        d(i, j) = (bary_(j) / bary_(i)) / (nodes_(i) - nodes_(j));
        diag -= d(i, j);
      }
      d(i, i) = diag;
    }
    return d;
  }

 private:
  Interval interval_;
  Vector nodes_;
  Vector bary_;
};

inline std::vector<LagrangeBasis1D> lagrange_bases(const TensorGrid& grid) {
  std::vector<LagrangeBasis1D> out;
  for (int i = 0; i < grid.dimension(); ++i) out.emplace_back(grid.rule(), grid.box()[static_cast<std::size_t>(i)]);
  return out;
}

/// L_alpha(x) for the Lagrange basis of the grid.
inline double lagrange_eval(const MultiIndex& alpha, const TensorGrid& grid, std::span<const double> x) {
  if (static_cast<int>(alpha.size()) != grid.dimension() || static_cast<int>(x.size()) != grid.dimension()) {
    throw std::invalid_argument("lagrange_eval: dimension mismatch");
  }
  double v = 1.0;
  for (int i = 0; i < grid.dimension(); ++i) {
    const LagrangeBasis1D basis(grid.rule(), grid.box()[static_cast<std::size_t>(i)]);
    v *= basis.cardinal(alpha[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)]);
  }
  return v;
}

/// Chebyshev values at the reference Legendre nodes: T(j, k) = T_k(t_j).
inline Matrix chebyshev_vandermonde(const Vector& reference_points, int n) {
  Matrix t(reference_points.size(), n + 1);
  for (Index j = 0; j < reference_points.size(); ++j) {
    for (int k = 0; k <= n; ++k) t(j, k) = chebyshev_t(k, reference_points(j));
  }
  return t;
}

/// Change of basis between Chebyshev coefficients and Lagrange (grid-value)
/// coefficients. Both directions are Kronecker products of 1D factors.
class BasisTransform {
 public:
  BasisTransform(int m, int n) : m_(m), n_(n) {
    const auto rule = legendre_rule_1d(n);
    Matrix t1 = chebyshev_vandermonde(rule.nodes, n);
    Eigen::PartialPivLU<Matrix> lu(t1);
    Matrix t1_inv = lu.inverse();
    if (!t1_inv.allFinite()) throw NumericalError("BasisTransform: Chebyshev-Vandermonde inversion failed");
    to_lagrange_ = KroneckerOperator(std::vector<Matrix>(static_cast<std::size_t>(m), t1));
    to_chebyshev_ = KroneckerOperator(std::vector<Matrix>(static_cast<std::size_t>(m), t1_inv));
  }

  int dimension() const { return m_; }
  int degree() const { return n_; }
  /// C = T Theta.
  const KroneckerOperator& to_lagrange() const { return to_lagrange_; }
  /// Theta = T^{-1} C.
  const KroneckerOperator& to_chebyshev() const { return to_chebyshev_; }

  Vector chebyshev_to_lagrange(const Vector& theta) const { return to_lagrange_.apply(theta); }
  Vector lagrange_to_chebyshev(const Vector& c) const { return to_chebyshev_.apply(c); }

 private:
  int m_;
  int n_;
  KroneckerOperator to_lagrange_;
  KroneckerOperator to_chebyshev_;
};

inline BasisTransform basis_transform(int m, int n, const Limits& limits = default_limits()) {
  if (m < 1 || n < 0) throw std::invalid_argument("basis_transform: invalid (m, n)");
  if (n > limits.max_degree) throw ResourceLimitError("basis_transform: degree exceeds cap");
  checked_pow(static_cast<std::size_t>(n + 1), m, limits.max_grid_size);
  return BasisTransform(m, n);
}

enum class BasisKind { Lagrange, Chebyshev };

inline std::string to_string(BasisKind b) { return b == BasisKind::Lagrange ? "lagrange" : "chebyshev"; }

inline BasisKind basis_from_string(const std::string& s) {
  if (s == "lagrange") return BasisKind::Lagrange;
  if (s == "chebyshev") return BasisKind::Chebyshev;
  throw std::invalid_argument("unknown basis '" + s + "'");
}

/// Polynomial surrogate: coefficients in MultiIndexSet order, in either basis.
/// Lagrange coefficients are values at the Legendre grid of the box.
struct Surrogate {
  int m = 1;
  int n = 0;
  BasisKind basis = BasisKind::Lagrange;
  Box box;
  Vector coeffs;

  void validate() const {
    if (m < 1 || n < 0) throw std::invalid_argument("surrogate: invalid (m, n)");
    if (static_cast<int>(box.size()) != m) throw std::invalid_argument("surrogate: box dimension mismatch");
    validate_box(box);
    const auto expected = checked_pow(static_cast<std::size_t>(n + 1), m, default_limits().max_grid_size);
    if (static_cast<std::size_t>(coeffs.size()) != expected) {
      throw std::invalid_argument("surrogate: expected (n+1)^m = " + std::to_string(expected) +
                                  " coefficients, got " + std::to_string(coeffs.size()));
    }
  }

  /// Per-axis evaluation matrix: rows are basis values at the given coordinates.
  Matrix axis_matrix(int axis, const Vector& coords) const {
    const auto& iv = box[static_cast<std::size_t>(axis)];
    if (basis == BasisKind::Lagrange) {
      const LagrangeBasis1D b(legendre_rule_1d(n), iv);
      return b.interpolation_matrix(coords);
    }
    Vector ref(coords.size());
    for (Index i = 0; i < coords.size(); ++i) ref(i) = iv.to_reference(coords(i));
    return chebyshev_vandermonde(ref, n);
  }

  double evaluate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != m) throw std::invalid_argument("surrogate: point dimension mismatch");
    std::vector<Matrix> rows;
    for (int i = 0; i < m; ++i) {
      Vector c(1);
      c(0) = x[static_cast<std::size_t>(i)];
      rows.push_back(axis_matrix(i, c));
    }
    return KroneckerOperator(std::move(rows)).apply(coeffs)(0);
  }

  /// Values on the tensor grid axes[0] x axes[1] x ... (first axis fastest).
  Vector evaluate_tensor(const std::vector<Vector>& axes) const {
    if (static_cast<int>(axes.size()) != m) throw std::invalid_argument("surrogate: axes dimension mismatch");
    std::vector<Matrix> factors;
    for (int i = 0; i < m; ++i) factors.push_back(axis_matrix(i, axes[static_cast<std::size_t>(i)]));
    return KroneckerOperator(std::move(factors)).apply(coeffs);
  }

  Surrogate to_basis(BasisKind target) const {
    if (target == basis) return *this;
    const auto tr = basis_transform(m, n);
    Surrogate s = *this;
    s.basis = target;
    s.coeffs = target == BasisKind::Chebyshev ? tr.lagrange_to_chebyshev(coeffs) : tr.chebyshev_to_lagrange(coeffs);
    return s;
  }
};

/// Lagrange surrogate reproducing the given grid values.
inline Surrogate interpolate(const TensorGrid& grid, const Vector& values) {
  if (static_cast<std::size_t>(values.size()) != grid.size()) {
    throw std::invalid_argument("interpolate: expected " + std::to_string(grid.size()) + " values, got " +
                                std::to_string(values.size()));
  }
  return Surrogate{grid.dimension(), grid.degree(), BasisKind::Lagrange, grid.box(), values};
}

using Field = std::function<double(std::span<const double>)>;

inline Vector sample(const Field& f, const Matrix& points) {
  Vector v(points.rows());
  std::vector<double> x(static_cast<std::size_t>(points.cols()));
  for (Index p = 0; p < points.rows(); ++p) {
    for (Index i = 0; i < points.cols(); ++i) x[static_cast<std::size_t>(i)] = points(p, i);
    v(p) = f(x);
  }
  return v;
}

inline Surrogate interpolate(const TensorGrid& grid, const Field& f) { return interpolate(grid, sample(f, grid.points())); }

/// Discrete L2 projection: coefficient alpha is <f, L_alpha> / w_alpha with the
/// inner product taken on a Gauss rule one degree finer than the grid.
inline Surrogate l2_project(const TensorGrid& grid, const Field& f) {
  const int m = grid.dimension();
  const TensorGrid fine(grid.degree() + 1, grid.box());
  std::vector<Matrix> factors;
  for (int i = 0; i < m; ++i) {
    const LagrangeBasis1D b(grid.rule(), grid.box()[static_cast<std::size_t>(i)]);
    factors.push_back(b.interpolation_matrix(fine.axis_nodes(i)).transpose());
  }
  const Vector fw = sample(f, fine.points()).cwiseProduct(fine.weights());
  Vector c = KroneckerOperator(std::move(factors)).apply(fw);
  c.array() /= grid.weights().array();
  return interpolate(grid, c);
}

}  // namespace psm

#pragma once

#include "psm/core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace psm {

/// The full tensor multi-index set {alpha : max_i alpha_i <= n}, ordered so that
/// comparisons look at the last coordinate first. Equivalently the linear
/// position is alpha_0 + (n+1) alpha_1 + (n+1)^2 alpha_2 + ..., i.e. the first
/// coordinate varies fastest.
class MultiIndexSet {
 public:
  MultiIndexSet(int m, int n, std::size_t size) : m_(m), n_(n), size_(size) {}

  int dimension() const { return m_; }
  int degree() const { return n_; }
  std::size_t size() const { return size_; }

  MultiIndex index_at(std::size_t pos) const {
    MultiIndex alpha(static_cast<std::size_t>(m_));
    const auto base = static_cast<std::size_t>(n_ + 1);
    for (int i = 0; i < m_; ++i) {
      alpha[static_cast<std::size_t>(i)] = static_cast<int>(pos % base);
      pos /= base;
    }
    return alpha;
  }

  std::size_t position_of(const MultiIndex& alpha) const {
    if (static_cast<int>(alpha.size()) != m_) throw std::invalid_argument("multi-index has wrong dimension");
    std::size_t pos = 0;
    for (int i = m_ - 1; i >= 0; --i) {
      const int a = alpha[static_cast<std::size_t>(i)];
      if (a < 0 || a > n_) throw std::out_of_range("multi-index entry out of range");
      pos = pos * static_cast<std::size_t>(n_ + 1) + static_cast<std::size_t>(a);
    }
    return pos;
  }

  std::vector<MultiIndex> indices() const {
    std::vector<MultiIndex> out;
    out.reserve(size_);
    for (std::size_t p = 0; p < size_; ++p) out.push_back(index_at(p));
    return out;
  }

  /// Order used by the set: compare from the last entry towards the first.
  static bool precedes(const MultiIndex& a, const MultiIndex& b) {
    for (std::size_t i = a.size(); i-- > 0;) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  }

 private:
  int m_;
  int n_;
  std::size_t size_;
};

inline MultiIndexSet multi_index_set(int m, int n, const Limits& limits = default_limits()) {
  if (m < 1) throw std::invalid_argument("multi_index_set: dimension must be >= 1");
  if (n < 0) throw std::invalid_argument("multi_index_set: degree must be >= 0");
  const auto size = checked_pow(static_cast<std::size_t>(n + 1), m, limits.max_grid_size);
  return MultiIndexSet(m, n, size);
}

/// Gauss-Legendre rule with n+1 nodes on (-1, 1).
struct LegendreRule1D {
  int n = 0;
  Vector nodes;
  Vector weights;
};

namespace detail {

/// Legendre polynomial P_k and P_{k-1} at x by the three-term recurrence.
inline std::pair<double, double> legendre_pair(int k, double x) {
  double p_prev = 1.0;
  if (k == 0) return {1.0, 0.0};
  double p = x;
  for (int j = 1; j < k; ++j) {
    const double next = ((2.0 * j + 1.0) * x * p - j * p_prev) / (j + 1.0);
    p_prev = p;
    p = next;
  }
  return {p, p_prev};
}

}  // namespace detail

/// Nodes are the roots of P_{n+1}; computed from the symmetric Jacobi matrix and
/// refined with one Newton step per node. Weights use 2 / ((1 - x^2) P'_{n+1}(x)^2).
inline LegendreRule1D legendre_rule_1d(int n, const Limits& limits = default_limits()) {
  if (n < 0) throw std::invalid_argument("legendre_rule_1d: degree must be >= 0");
  if (n > limits.max_degree) {
    throw ResourceLimitError("legendre_rule_1d: degree " + std::to_string(n) + " exceeds cap " +
                             std::to_string(limits.max_degree));
  }
  LegendreRule1D rule;
  rule.n = n;
  const int count = n + 1;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  if (count == 1) {
    rule.nodes(0) = 0.0;
    rule.weights(0) = 2.0;
    return rule;
  }

  Vector diag = Vector::Zero(count);
  Vector sub(count - 1);
  for (int k = 1; k < count; ++k) sub(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("legendre_rule_1d: eigen solve failed");
  Vector x = eig.eigenvalues();

  const int deg = n + 1;
  for (int i = 0; i < count; ++i) {
    const double xi = x(i);
    const auto [p, pm1] = detail::legendre_pair(deg, xi);
    const double dp = deg * (xi * p - pm1) / (xi * xi - 1.0);
    x(i) = xi - p / dp;
  }
  // Enforce exact symmetry about the origin.
  for (int i = 0; i < count / 2; ++i) {
    const double a = 0.5 * (x(count - 1 - i) - x(i));
    x(i) = -a;
    x(count - 1 - i) = a;
  }
  if (count % 2 == 1) x(count / 2) = 0.0;

  Vector w(count);
  for (int i = 0; i < count; ++i) {
    const double xi = x(i);
    const auto [p, pm1] = detail::legendre_pair(deg, xi);
    const double dp = deg * (xi * p - pm1) / (xi * xi - 1.0);
    w(i) = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
  for (int i = 0; i < count / 2; ++i) {
    const double a = 0.5 * (w(i) + w(count - 1 - i));
    w(i) = a;
    w(count - 1 - i) = a;
  }
  rule.nodes = std::move(x);
  rule.weights = std::move(w);
  return rule;
}

/// Tensor Legendre grid on a box. Dimension 0 is allowed and denotes a single
/// point of unit weight (used for the faces of a 1D domain).
class TensorGrid {
 public:
  TensorGrid(int n, Box box, const Limits& limits = default_limits())
      : n_(n), box_(std::move(box)), rule_(legendre_rule_1d(n, limits)) {
    if (!box_.empty()) validate_box(box_);
    const int m = dimension();
    size_ = checked_pow(static_cast<std::size_t>(n + 1), m, limits.max_grid_size);
    axis_nodes_.resize(static_cast<std::size_t>(m));
    axis_weights_.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      const auto& iv = box_[static_cast<std::size_t>(i)];
      Vector nodes(n + 1);
      for (int j = 0; j <= n; ++j) nodes(j) = iv.from_reference(rule_.nodes(j));
      axis_nodes_[static_cast<std::size_t>(i)] = std::move(nodes);
      axis_weights_[static_cast<std::size_t>(i)] = rule_.weights * (0.5 * iv.length());
    }
    const auto N = static_cast<Index>(size_);
    points_.resize(N, m);
    weights_.resize(N);
    const MultiIndexSet set(m, n, size_);
    for (Index p = 0; p < N; ++p) {
      const auto alpha = set.index_at(static_cast<std::size_t>(p));
      double w = 1.0;
      for (int i = 0; i < m; ++i) {
        const auto a = alpha[static_cast<std::size_t>(i)];
        points_(p, i) = axis_nodes_[static_cast<std::size_t>(i)](a);
        w *= axis_weights_[static_cast<std::size_t>(i)](a);
      }
      weights_(p) = w;
    }
  }

  int dimension() const { return static_cast<int>(box_.size()); }
  int degree() const { return n_; }
  std::size_t size() const { return size_; }
  const Box& box() const { return box_; }
  const LegendreRule1D& rule() const { return rule_; }
  MultiIndexSet index_set() const { return MultiIndexSet(dimension(), n_, size_); }

  /// N x m matrix of grid points in MultiIndexSet order.
  const Matrix& points() const { return points_; }
  const Vector& weights() const { return weights_; }
  const Vector& axis_nodes(int axis) const { return axis_nodes_.at(static_cast<std::size_t>(axis)); }
  const Vector& axis_weights(int axis) const { return axis_weights_.at(static_cast<std::size_t>(axis)); }

  std::vector<double> point(Index p) const {
    std::vector<double> x(static_cast<std::size_t>(dimension()));
    for (int i = 0; i < dimension(); ++i) x[static_cast<std::size_t>(i)] = points_(p, i);
    return x;
  }

 private:
  int n_;
  Box box_;
  LegendreRule1D rule_;
  std::size_t size_ = 1;
  std::vector<Vector> axis_nodes_;
  std::vector<Vector> axis_weights_;
  Matrix points_;
  Vector weights_;
};

inline TensorGrid tensor_grid(int m, int n, const Box& box, const Limits& limits = default_limits()) {
  if (m < 1) throw std::invalid_argument("tensor_grid: dimension must be >= 1");
  if (static_cast<int>(box.size()) != m) throw std::invalid_argument("tensor_grid: box dimension mismatch");
  validate_box(box);
  return TensorGrid(n, box, limits);
}

/// One face {x_axis = lo or hi} of a box with its (m-1)-dimensional Legendre grid.
struct FaceGrid {
  int axis = 0;
  int side = -1;  ///< -1 for the lower face, +1 for the upper face
  double fixed_value = 0.0;
  TensorGrid grid;

  /// Face grid points embedded in R^m (N_face x m).
  Matrix embedded_points() const {
    const Matrix& local = grid.points();
    const int m = grid.dimension() + 1;
    Matrix out(static_cast<Index>(grid.size()), m);
    for (Index p = 0; p < out.rows(); ++p) {
      int k = 0;
      for (int i = 0; i < m; ++i) out(p, i) = (i == axis) ? fixed_value : local(p, k++);
    }
    return out;
  }
};

/// The 2m faces ordered (axis 0, lower), (axis 0, upper), (axis 1, lower), ...
inline std::vector<FaceGrid> boundary_grids(int m, int n_bnd, const Box& box,
                                            const Limits& limits = default_limits()) {
  if (m < 1) throw std::invalid_argument("boundary_grids: dimension must be >= 1");
  if (static_cast<int>(box.size()) != m) throw std::invalid_argument("boundary_grids: box dimension mismatch");
  validate_box(box);
  std::vector<FaceGrid> faces;
  faces.reserve(static_cast<std::size_t>(2 * m));
  for (int j = 0; j < m; ++j) {
    Box face_box;
    for (int i = 0; i < m; ++i) {
      if (i != j) face_box.push_back(box[static_cast<std::size_t>(i)]);
    }
    for (int side : {-1, 1}) {
      const auto& iv = box[static_cast<std::size_t>(j)];
      faces.push_back(FaceGrid{j, side, side < 0 ? iv.lo : iv.hi, TensorGrid(n_bnd, face_box, limits)});
    }
  }
  return faces;
}

}  // namespace psm

#pragma once

#include "psm/basis.hpp"
#include "psm/core.hpp"
#include "psm/grid.hpp"
#include "psm/kron.hpp"
#include "psm/weights.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

namespace psm {

/// D(i, j) = l_j'(x_i) on the Legendre nodes mapped to the interval: exact
/// differentiation of polynomials of degree <= n given by their nodal values.
inline Matrix diff_matrix_1d(const LegendreRule1D& rule, const Interval& iv = Interval{}) {
  return LagrangeBasis1D(rule, iv).differentiation_matrix();
}

/// W^{-1} A^T W for a diagonal W given by w.
inline Matrix adjoint(const Matrix& op, const Vector& w) {
  return w.cwiseInverse().asDiagonal() * op.transpose() * w.asDiagonal();
}

enum class SobolevVariant { Plain, Starred };

/// All beta in N^m with |beta|_1 <= k, starting with beta = 0.
inline std::vector<MultiIndex> multi_indices_up_to(int m, int k) {
  std::vector<MultiIndex> out;
  MultiIndex beta(static_cast<std::size_t>(m), 0);
  for (int total = 0; total <= k; ++total) {
    // Enumerate compositions of `total` into m non-negative parts.
    std::function<void(int, int)> rec = [&](int axis, int left) {
      if (axis == m - 1) {
        beta[static_cast<std::size_t>(axis)] = left;
        out.push_back(beta);
        return;
      }
      for (int b = left; b >= 0; --b) {
        beta[static_cast<std::size_t>(axis)] = b;
        rec(axis + 1, left - b);
      }
    };
    rec(0, total);
  }
  return out;
}

/// Trace of a domain polynomial on one face, sampled on the face Legendre grid.
struct TraceOperator {
  FaceGrid face;
  /// Acts on domain grid values (Lagrange coefficients).
  KroneckerOperator on_values;
  /// Acts on Chebyshev coefficients.
  KroneckerOperator on_chebyshev;
};

/// Truncated operators for one tensor grid: differentiation, adjoints, Sobolev
/// weights and traces. Weights are built on first request and memoised; the
/// cache may be shared across threads.
class OperatorCache {
 public:
  explicit OperatorCache(TensorGrid grid, const Limits& limits = default_limits())
      : grid_(std::move(grid)), limits_(limits) {
    for (int i = 0; i < dimension(); ++i) {
      diff_.push_back(diff_matrix_1d(grid_.rule(), grid_.box()[static_cast<std::size_t>(i)]));
    }
  }

  const TensorGrid& grid() const { return grid_; }
  int dimension() const { return grid_.dimension(); }
  int degree() const { return grid_.degree(); }
  Index size() const { return static_cast<Index>(grid_.size()); }
  const Vector& weights() const { return grid_.weights(); }
  const Matrix& diff_1d(int axis) const { return diff_.at(static_cast<std::size_t>(axis)); }

  /// D_beta = prod_i D_i^{beta_i} as a Kronecker operator; beta = 0 gives identity.
  KroneckerOperator diff_operator(const MultiIndex& beta) const {
    check_beta(beta);
    std::vector<Matrix> factors;
    for (int i = 0; i < dimension(); ++i) factors.push_back(matrix_power(diff_1d(i), beta[static_cast<std::size_t>(i)]));
    return KroneckerOperator(std::move(factors));
  }

  /// D_beta^* = W^{-1} D_beta^T W, still a Kronecker product since W is.
  KroneckerOperator adjoint_operator(const MultiIndex& beta) const {
    check_beta(beta);
    std::vector<Matrix> factors;
    for (int i = 0; i < dimension(); ++i) {
      const Vector& w = grid_.axis_weights(i);
      factors.push_back(adjoint(matrix_power(diff_1d(i), beta[static_cast<std::size_t>(i)]), w));
    }
    return KroneckerOperator(std::move(factors));
  }

  /// Sum over |beta|_1 <= k of D_beta^* D_beta (plain) or D_beta D_beta^* (starred), dense.
  Matrix jstar_inverse_dense(int k, SobolevVariant variant) const {
    check_dense("jstar_inverse_dense");
    Matrix sum = Matrix::Zero(size(), size());
    for (const auto& beta : multi_indices_up_to(dimension(), k)) {
      const Matrix d = diff_operator(beta).dense();
      const Matrix ds = adjoint_operator(beta).dense();
      sum += variant == SobolevVariant::Plain ? Matrix(ds * d) : Matrix(d * ds);
    }
    return sum;
  }

  /// Weight of the order-k Sobolev cubature. k > 0: W J*^{-1}; k < 0: W J*;
  /// k = 0: W. Starred variants use the dual sum D D^*. |k| = 1 uses an exact
  /// Kronecker eigendecomposition unless force_dense is set.
  WeightPtr sobolev_weight(int k, SobolevVariant variant, bool force_dense = false) const {
    const auto key = std::make_tuple(k, variant, force_dense);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = weights_cache_.find(key);
      if (it != weights_cache_.end()) return it->second;
    }
    WeightPtr w = build_weight(k, variant, force_dense);
    std::lock_guard<std::mutex> lock(mutex_);
    return weights_cache_.emplace(key, std::move(w)).first->second;
  }

  /// Dense symmetric matrix of sobolev_weight.
  Matrix sobolev_weight_matrix(int k, SobolevVariant variant) const {
    check_dense("sobolev_weight_matrix");
    return sobolev_weight(k, variant)->dense();
  }

  TraceOperator trace(int axis, int side, int n_bnd) const {
    const auto faces = boundary_grids(dimension(), n_bnd, grid_.box(), limits_);
    const auto& face = faces.at(static_cast<std::size_t>(2 * axis + (side < 0 ? 0 : 1)));
    return trace(face);
  }

  TraceOperator trace(const FaceGrid& face) const {
    std::vector<Matrix> values;
    std::vector<Matrix> cheb;
    int k = 0;
    for (int i = 0; i < dimension(); ++i) {
      const auto& iv = grid_.box()[static_cast<std::size_t>(i)];
      const LagrangeBasis1D basis(grid_.rule(), iv);
      Vector pts;
      if (i == face.axis) {
        pts = Vector::Constant(1, face.fixed_value);
      } else {
        pts = face.grid.axis_nodes(k++);
      }
      values.push_back(basis.interpolation_matrix(pts));
      Vector ref(pts.size());
      for (Index j = 0; j < pts.size(); ++j) ref(j) = iv.to_reference(pts(j));
      cheb.push_back(chebyshev_vandermonde(ref, degree()));
    }
    return TraceOperator{face, KroneckerOperator(std::move(values)), KroneckerOperator(std::move(cheb))};
  }

  std::vector<TraceOperator> traces(int n_bnd) const {
    std::vector<TraceOperator> out;
    for (const auto& face : boundary_grids(dimension(), n_bnd, grid_.box(), limits_)) out.push_back(trace(face));
    return out;
  }

 private:
  static Matrix matrix_power(const Matrix& d, int p) {
    Matrix r = Matrix::Identity(d.rows(), d.cols());
    for (int j = 0; j < p; ++j) r = d * r;
    return r;
  }

  void check_beta(const MultiIndex& beta) const {
    if (static_cast<int>(beta.size()) != dimension()) throw std::invalid_argument("derivative multi-index has wrong dimension");
    for (int b : beta) {
      if (b < 0) throw std::invalid_argument("negative derivative order");
    }
  }

  void check_dense(const char* what) const {
    if (static_cast<std::size_t>(size()) > limits_.max_dense_size) {
      throw ResourceLimitError(std::string(what) + ": grid size exceeds dense cap");
    }
  }

  WeightPtr build_weight(int k, SobolevVariant variant, bool force_dense) const {
    const Vector& w = grid_.weights();
    if (k == 0) return std::make_shared<DiagonalWeight>(w);
    if (std::abs(k) == 1 && !force_dense) return spectral_weight(k, variant);

    const Matrix sum = jstar_inverse_dense(std::abs(k), variant);
    using Kind = DenseFactorWeight::Kind;
    if (variant == SobolevVariant::Plain) {
      // W J*^{-1} = sum D^T W D = G;  W J* = W G^{-1} W.
      const Matrix g = w.asDiagonal() * sum;
      const Matrix gs = 0.5 * (g + g.transpose());
      return k > 0 ? std::make_shared<DenseFactorWeight>(gs, Kind::Direct)
                   : std::make_shared<DenseFactorWeight>(gs, Kind::Inverse, w);
    }
    // sum D W^{-1} D^T W = B W;  W (B W) = W B W;  W (B W)^{-1} = B^{-1}.
    const Matrix b = sum * w.cwiseInverse().asDiagonal();
    const Matrix bs = 0.5 * (b + b.transpose());
    return k > 0 ? std::make_shared<DenseFactorWeight>(bs, Kind::Direct, w)
                 : std::make_shared<DenseFactorWeight>(bs, Kind::Inverse);
  }

  /// Per axis, E = w^{1/2} D w^{-1/2}; plain uses E^T E, starred E E^T. With
  /// Q Lambda Q^T that eigendecomposition and F = Q^T w^{1/2}, the order +-1
  /// weight is (x)F^T diag(1 + sum_i lambda_i)^{+-1} (x)F.
  WeightPtr spectral_weight(int k, SobolevVariant variant) const {
    const int m = dimension();
    std::vector<Matrix> factors;
    std::vector<Vector> lambdas;
    for (int i = 0; i < m; ++i) {
      const Vector& w = grid_.axis_weights(i);
      const Vector sw = w.cwiseSqrt();
      const Matrix e = sw.asDiagonal() * diff_1d(i) * sw.cwiseInverse().asDiagonal();
      const Matrix s = variant == SobolevVariant::Plain ? Matrix(e.transpose() * e) : Matrix(e * e.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (s + s.transpose()));
      if (eig.info() != Eigen::Success) throw NumericalError("sobolev weight: eigendecomposition failed");
      factors.push_back(eig.eigenvectors().transpose() * sw.asDiagonal());
      lambdas.push_back(eig.eigenvalues().cwiseMax(0.0));
    }
    Vector d(size());
    const MultiIndexSet set(m, degree(), static_cast<std::size_t>(size()));
    for (Index p = 0; p < size(); ++p) {
      const auto alpha = set.index_at(static_cast<std::size_t>(p));
      double s = 1.0;
      for (int i = 0; i < m; ++i) s += lambdas[static_cast<std::size_t>(i)](alpha[static_cast<std::size_t>(i)]);
      d(p) = k > 0 ? std::sqrt(s) : 1.0 / std::sqrt(s);
    }
    return std::make_shared<KroneckerSpectralWeight>(KroneckerOperator(std::move(factors)), std::move(d));
  }

  TensorGrid grid_;
  Limits limits_;
  std::vector<Matrix> diff_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<int, SobolevVariant, bool>, WeightPtr> weights_cache_;
};

}  // namespace psm

#pragma once

#include "psm/core.hpp"

#include <vector>

namespace psm {

/// Linear map on tensors stored first-axis-fastest, given by one small factor
/// per axis: factor i (r_i x c_i) acts along axis i. The dense equivalent is
/// F_{m-1} (x) ... (x) F_0, but application never materialises it.
class KroneckerOperator {
 public:
  KroneckerOperator() = default;
  explicit KroneckerOperator(std::vector<Matrix> factors) : factors_(std::move(factors)) {
    for (const auto& f : factors_) identity_.push_back(f.rows() == f.cols() && f.isIdentity(0.0));
  }

  int dimension() const { return static_cast<int>(factors_.size()); }
  const std::vector<Matrix>& factors() const { return factors_; }

  Index rows() const {
    Index r = 1;
    for (const auto& f : factors_) r *= f.rows();
    return r;
  }
  Index cols() const {
    Index c = 1;
    for (const auto& f : factors_) c *= f.cols();
    return c;
  }

  /// Applies the operator to every column of x.
  Matrix apply(const Matrix& x) const {
    if (x.rows() != cols()) throw std::invalid_argument("KroneckerOperator::apply: size mismatch");
    Matrix out(rows(), x.cols());
    // Eigen-owned buffers keep a fixed alignment, so vectorised products round
    // the same way on every call.
    Vector a;
    Vector b;
    for (Index col = 0; col < x.cols(); ++col) {
      a = x.col(col);
      std::vector<Index> extent;
      for (const auto& f : factors_) extent.push_back(f.cols());
      for (int axis = 0; axis < dimension(); ++axis) {
        const Matrix& f = factors_[static_cast<std::size_t>(axis)];
        if (is_identity(axis)) continue;
        mode_product(f, axis, extent, a, b);
        std::swap(a, b);
        extent[static_cast<std::size_t>(axis)] = f.rows();
      }
      out.col(col) = a;
    }
    return out;
  }

  Vector apply(const Vector& x) const {
    Matrix xm = x;
    return apply(xm).col(0);
  }

  KroneckerOperator transpose() const {
    std::vector<Matrix> t;
    t.reserve(factors_.size());
    for (const auto& f : factors_) t.push_back(f.transpose());
    return KroneckerOperator(std::move(t));
  }

  /// Materialised matrix; only for moderate sizes.
  Matrix dense() const {
    Matrix d = Matrix::Ones(1, 1);
    for (const auto& f : factors_) {
      Matrix next(f.rows() * d.rows(), f.cols() * d.cols());
      for (Index i = 0; i < f.rows(); ++i) {
        for (Index j = 0; j < f.cols(); ++j) {
          next.block(i * d.rows(), j * d.cols(), d.rows(), d.cols()) = f(i, j) * d;
        }
      }
      d = std::move(next);
    }
    return d;
  }

  /// target += scale * diag(row_scale) * dense(). Identity factors are skipped
  /// so the cost is proportional to the number of structural nonzeros.
  void add_to_dense(Eigen::Ref<Matrix> target, const Vector* row_scale = nullptr, double scale = 1.0) const {
    if (target.rows() != rows() || target.cols() != cols()) {
      throw std::invalid_argument("KroneckerOperator::add_to_dense: target size mismatch");
    }
    const int m = dimension();
    std::vector<Index> rstride(static_cast<std::size_t>(m));
    std::vector<Index> cstride(static_cast<std::size_t>(m));
    Index rs = 1;
    Index cs = 1;
    for (int i = 0; i < m; ++i) {
      rstride[static_cast<std::size_t>(i)] = rs;
      cstride[static_cast<std::size_t>(i)] = cs;
      rs *= factors_[static_cast<std::size_t>(i)].rows();
      cs *= factors_[static_cast<std::size_t>(i)].cols();
    }
    std::vector<int> active;
    for (int i = 0; i < m; ++i) {
      if (!is_identity(i)) active.push_back(i);
    }
    std::vector<Index> pidx(static_cast<std::size_t>(m));
    std::vector<Index> qidx(static_cast<std::size_t>(m));
    for (Index p = 0; p < rows(); ++p) {
      Index rem = p;
      for (int i = 0; i < m; ++i) {
        const Index r = factors_[static_cast<std::size_t>(i)].rows();
        pidx[static_cast<std::size_t>(i)] = rem % r;
        rem /= r;
      }
      const double s = scale * (row_scale ? (*row_scale)(p) : 1.0);
      if (s == 0.0) continue;
      Index qbase = 0;
      for (int i = 0; i < m; ++i) {
        if (is_identity(i)) qbase += pidx[static_cast<std::size_t>(i)] * cstride[static_cast<std::size_t>(i)];
      }
      // Odometer over the columns of the active factors.
      for (int i : active) qidx[static_cast<std::size_t>(i)] = 0;
      while (true) {
        double v = s;
        Index q = qbase;
        for (int i : active) {
          const auto ui = static_cast<std::size_t>(i);
          v *= factors_[ui](pidx[ui], qidx[ui]);
          q += qidx[ui] * cstride[ui];
        }
        target(p, q) += v;
        std::size_t k = 0;
        for (; k < active.size(); ++k) {
          const auto ui = static_cast<std::size_t>(active[k]);
          if (++qidx[ui] < factors_[ui].cols()) break;
          qidx[ui] = 0;
        }
        if (k == active.size()) break;
      }
    }
  }

  /// Apply one factor along one axis of a tensor with the given extents.
  static void mode_product(const Matrix& f, int axis, const std::vector<Index>& extent,
                           const Vector& in, Vector& out) {
    Index pre = 1;
    for (int i = 0; i < axis; ++i) pre *= extent[static_cast<std::size_t>(i)];
    Index post = 1;
    for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < extent.size(); ++i) post *= extent[i];
    const Index e = extent[static_cast<std::size_t>(axis)];
    const Index r = f.rows();
    out.resize(pre * r * post);
    for (Index c = 0; c < post; ++c) {
      Eigen::Map<const Matrix> xin(in.data() + c * pre * e, pre, e);
      Eigen::Map<Matrix> xout(out.data() + c * pre * r, pre, r);
      xout.noalias() = xin * f.transpose();
    }
  }

 private:
  bool is_identity(int axis) const { return identity_[static_cast<std::size_t>(axis)]; }

  std::vector<Matrix> factors_;
  std::vector<bool> identity_;
};

}  // namespace psm

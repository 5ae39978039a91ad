#pragma once

#include "psm/core.hpp"
#include "psm/kron.hpp"

#include <Eigen/Cholesky>

#include <memory>
#include <utility>

namespace psm {

/// Symmetric positive definite weight M of a quadratic form q^T M q, together
/// with a factor R (M = R R^T) so that q^T M q = |R^T q|^2. Losses are
/// assembled on R^T-whitened residuals.
class WeightOperator {
 public:
  virtual ~WeightOperator() = default;
  virtual Index size() const = 0;
  /// M x, column by column.
  virtual Matrix apply(const Matrix& x) const = 0;
  /// R^T x, column by column.
  virtual Matrix whiten(const Matrix& x) const = 0;

  Vector apply(const Vector& x) const { return apply(Matrix(x)).col(0); }
  Vector whiten(const Vector& x) const { return whiten(Matrix(x)).col(0); }

  /// Materialised M, symmetrised.
  virtual Matrix dense() const {
    Matrix m = apply(Matrix(Matrix::Identity(size(), size())));
    return 0.5 * (m + m.transpose());
  }

  double form(const Vector& f, const Vector& g) const { return f.dot(apply(g)); }
};

using WeightPtr = std::shared_ptr<const WeightOperator>;

class DiagonalWeight final : public WeightOperator {
 public:
  explicit DiagonalWeight(Vector d) : d_(std::move(d)), sqrt_d_(d_.cwiseSqrt()) {}
  Index size() const override { return d_.size(); }
  Matrix apply(const Matrix& x) const override { return d_.asDiagonal() * x; }
  Matrix whiten(const Matrix& x) const override { return sqrt_d_.asDiagonal() * x; }
  Matrix dense() const override { return d_.asDiagonal(); }
  const Vector& diagonal() const { return d_; }

 private:
  Vector d_;
  Vector sqrt_d_;
};

/// M = (F_{m-1} (x) ... (x) F_0)^T diag(d)^2 (F_{m-1} (x) ... (x) F_0).
class KroneckerSpectralWeight final : public WeightOperator {
 public:
  KroneckerSpectralWeight(KroneckerOperator f, Vector d) : f_(std::move(f)), ft_(f_.transpose()), d_(std::move(d)) {}
  Index size() const override { return d_.size(); }
  Matrix whiten(const Matrix& x) const override { return d_.asDiagonal() * f_.apply(x); }
  Matrix apply(const Matrix& x) const override {
    Matrix y = f_.apply(x);
    y = d_.array().square().matrix().asDiagonal() * y;
    return ft_.apply(y);
  }

 private:
  KroneckerOperator f_;
  KroneckerOperator ft_;
  Vector d_;
};

/// Weights built from a dense SPD matrix A = L L^T and a positive diagonal s:
///   Kind::Direct        M = S A S      (R^T = L^T S)
///   Kind::Inverse       M = S A^{-1} S (R^T = L^{-1} S)
/// with S = diag(s) (identity when s is empty).
class DenseFactorWeight final : public WeightOperator {
 public:
  enum class Kind { Direct, Inverse };

  DenseFactorWeight(const Matrix& a, Kind kind, Vector s = Vector()) : kind_(kind), s_(std::move(s)) {
    llt_.compute(a);
    if (llt_.info() != Eigen::Success) throw NumericalError("DenseFactorWeight: matrix is not positive definite");
    n_ = a.rows();
  }

  Index size() const override { return n_; }

  Matrix whiten(const Matrix& x) const override {
    Matrix y = scale(x);
    if (kind_ == Kind::Direct) return llt_.matrixU() * y;
    llt_.matrixL().solveInPlace(y);
    return y;
  }

  Matrix apply(const Matrix& x) const override {
    Matrix y = scale(x);
    if (kind_ == Kind::Direct) {
      y = llt_.matrixL() * (llt_.matrixU() * y).eval();
    } else {
      y = llt_.solve(y);
    }
    return scale(y);
  }

 private:
  Matrix scale(const Matrix& x) const { return s_.size() ? Matrix(s_.asDiagonal() * x) : x; }

  Kind kind_;
  Vector s_;
  Eigen::LLT<Matrix> llt_;
  Index n_ = 0;
};

/// M = B B for a symmetric weight B, so that q^T M q = |B q|^2.
class SquaredWeight final : public WeightOperator {
 public:
  explicit SquaredWeight(WeightPtr base) : base_(std::move(base)) {}
  Index size() const override { return base_->size(); }
  Matrix apply(const Matrix& x) const override { return base_->apply(base_->apply(x)); }
  Matrix whiten(const Matrix& x) const override { return base_->apply(x); }

 private:
  WeightPtr base_;
};

}  // namespace psm

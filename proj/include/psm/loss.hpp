#pragma once

#include "psm/basis.hpp"
#include "psm/core.hpp"
#include "psm/grid.hpp"
#include "psm/operators.hpp"
#include "psm/problem.hpp"
#include "psm/weights.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace psm {

enum class LossMode { Strong, Weak };

struct MetricChoice {
  int k = 0;
  SobolevVariant variant = SobolevVariant::Plain;
  LossMode mode = LossMode::Strong;
};

/// "l2", "l2-weak", "h1", "h1-star", "h-1-star", "h-2", ... ; a trailing
/// "-weak" selects the weak mode.
inline MetricChoice parse_norm(std::string s) {
  MetricChoice c;
  auto strip = [&](const std::string& suffix) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      s.erase(s.size() - suffix.size());
      return true;
    }
    return false;
  };
  if (strip("-weak")) c.mode = LossMode::Weak;
  else strip("-strong");
  if (strip("-star")) c.variant = SobolevVariant::Starred;
  if (s == "l2") {
    c.k = 0;
    return c;
  }
  if (s.size() >= 2 && s[0] == 'h') {
    try {
      std::size_t used = 0;
      c.k = std::stoi(s.substr(1), &used);
      if (used == s.size() - 1) return c;
    } catch (const std::exception&) {
    }
  }
  throw std::invalid_argument("unknown norm '" + s + "' (expected l2, h<k>, h-<k>, optional -star and -weak suffixes)");
}

inline std::string to_string(const MetricChoice& c) {
  std::string s = c.k == 0 ? "l2" : "h" + std::to_string(c.k);
  if (c.variant == SobolevVariant::Starred) s += "-star";
  if (c.mode == LossMode::Weak) s += "-weak";
  return s;
}

struct LossSpec {
  /// Metric of PDE residuals; the dual starred H^-1 is the default.
  MetricChoice pde{-1, SobolevVariant::Starred, LossMode::Strong};
  /// Metric of boundary, data and constraint residuals.
  MetricChoice aux{};
  double pde_weight = 1.0;
  double boundary_weight = 1.0;
  double data_weight = 1.0;
  double constraint_weight = 1.0;
  double pin_weight = 1.0;
  /// Use dense factorisations for every Sobolev weight (testing aid).
  bool dense_weights = false;
};

/// Where each unknown lives in the flat state vector: unknown fields first
/// (grid values, one block each), then unknown scalar parameters.
class StateLayout {
 public:
  StateLayout() = default;
  StateLayout(const ProblemSpec& p, Index grid_size) : grid_size_(grid_size) {
    for (const auto& f : p.fields) field_slot_.push_back(f.unknown ? unknown_fields_++ : -1);
    for (const auto& q : p.params) param_slot_.push_back(q.unknown ? unknown_params_++ : -1);
  }

  Index grid_size() const { return grid_size_; }
  Index size() const { return unknown_fields_ * grid_size_ + unknown_params_; }
  bool field_unknown(int f) const { return field_slot_.at(static_cast<std::size_t>(f)) >= 0; }
  bool param_unknown(int p) const { return p >= 0 && param_slot_.at(static_cast<std::size_t>(p)) >= 0; }
  Index field_offset(int f) const { return field_slot_.at(static_cast<std::size_t>(f)) * grid_size_; }
  Index param_offset(int p) const { return unknown_fields_ * grid_size_ + param_slot_.at(static_cast<std::size_t>(p)); }

 private:
  Index grid_size_ = 0;
  std::vector<int> field_slot_;
  std::vector<int> param_slot_;
  int unknown_fields_ = 0;
  int unknown_params_ = 0;
};

/// Values of fields and parameters for a given state vector.
struct StateView {
  const StateLayout* layout;
  const std::vector<Vector>* known_fields;
  const std::vector<double>* fixed_params;
  const Vector* x;

  Vector field(int f) const {
    if (layout->field_unknown(f)) return x->segment(layout->field_offset(f), layout->grid_size());
    return (*known_fields)[static_cast<std::size_t>(f)];
  }
  double param(int p) const {
    if (p < 0) return 1.0;
    if (layout->param_unknown(p)) return (*x)(layout->param_offset(p));
    return (*fixed_params)[static_cast<std::size_t>(p)];
  }
};

/// One residual vector r(x), measured as lambda * r^T M r.
class ResidualBlock {
 public:
  virtual ~ResidualBlock() = default;
  virtual Index rows() const = 0;
  virtual Vector value(const StateView& s) const = 0;
  /// Dense Jacobian, rows() x state size.
  virtual Matrix jacobian(const StateView& s) const = 0;
  /// J^T y without forming J.
  virtual Vector jacobian_transpose_apply(const StateView& s, const Vector& y) const = 0;
  /// h += sum_k y_k Hess(r_k); nothing for affine blocks.
  virtual void add_curvature(const StateView&, const Vector&, Matrix&) const {}
  virtual bool affine() const = 0;

  std::string name;
  WeightPtr weight;  ///< null means the identity
  double term_weight = 1.0;

  Vector weighted(const Vector& r) const { return weight ? weight->apply(r) : r; }
  Matrix whitened(const Matrix& j) const { return weight ? weight->whiten(j) : j; }
};

/// Residual of an Equation on the domain grid.
class EquationBlock final : public ResidualBlock {
 public:
  EquationBlock(const Equation& eq, const ProblemSpec& p, const OperatorCache& ops, const StateLayout& layout)
      : layout_(&layout), n_(ops.size()) {
    name = eq.name;
    const Matrix& pts = ops.grid().points();
    for (const auto& t : eq.linear) {
      Lin l{t.field, t.param, t.scale, ops.diff_operator(t.beta), Vector()};
      if (t.coefficient) l.coeff = sample(t.coefficient, pts);
      linear_.push_back(std::move(l));
    }
    for (const auto& t : eq.sources) sources_.push_back(Src{t.param, t.scale, sample(t.values, pts)});
    for (const auto& t : eq.products) {
      products_.push_back(Prod{t.field_a, t.field_b, t.scale, ops.diff_operator(t.beta_a), ops.diff_operator(t.beta_b)});
    }
    affine_ = true;
    for (const auto& l : linear_) {
      if (layout.field_unknown(l.field) && layout.param_unknown(l.param)) affine_ = false;
    }
    for (const auto& q : products_) {
      if (layout.field_unknown(q.a) && layout.field_unknown(q.b)) affine_ = false;
    }
    (void)p;
  }

  Index rows() const override { return n_; }
  bool affine() const override { return affine_; }

  Vector value(const StateView& s) const override {
    Vector r = Vector::Zero(n_);
    for (const auto& l : linear_) r += l.scale * s.param(l.param) * l.apply(s.field(l.field));
    for (const auto& q : sources_) r += q.scale * s.param(q.param) * q.values;
    for (const auto& q : products_) {
      r += q.scale * q.da.apply(s.field(q.a)).cwiseProduct(q.db.apply(s.field(q.b)));
    }
    return r;
  }

  Matrix jacobian(const StateView& s) const override {
    Matrix j = Matrix::Zero(n_, layout_->size());
    for (const auto& l : linear_) {
      const double pv = s.param(l.param);
      if (layout_->field_unknown(l.field) && pv != 0.0) {
        l.d.add_to_dense(j.middleCols(layout_->field_offset(l.field), n_), l.coeff.size() ? &l.coeff : nullptr, l.scale * pv);
      }
      if (layout_->param_unknown(l.param)) j.col(layout_->param_offset(l.param)) += l.scale * l.apply(s.field(l.field));
    }
    for (const auto& q : sources_) {
      if (layout_->param_unknown(q.param)) j.col(layout_->param_offset(q.param)) += q.scale * q.values;
    }
    for (const auto& q : products_) {
      if (layout_->field_unknown(q.a)) {
        const Vector rs = q.db.apply(s.field(q.b));
        q.da.add_to_dense(j.middleCols(layout_->field_offset(q.a), n_), &rs, q.scale);
      }
      if (layout_->field_unknown(q.b)) {
        const Vector rs = q.da.apply(s.field(q.a));
        q.db.add_to_dense(j.middleCols(layout_->field_offset(q.b), n_), &rs, q.scale);
      }
    }
    return j;
  }

  Vector jacobian_transpose_apply(const StateView& s, const Vector& y) const override {
    Vector g = Vector::Zero(layout_->size());
    for (const auto& l : linear_) {
      if (layout_->field_unknown(l.field)) {
        const Vector cy = l.coeff.size() ? Vector(l.coeff.cwiseProduct(y)) : y;
        g.segment(layout_->field_offset(l.field), n_) += l.scale * s.param(l.param) * l.dt.apply(cy);
      }
      if (layout_->param_unknown(l.param)) g(layout_->param_offset(l.param)) += l.scale * y.dot(l.apply(s.field(l.field)));
    }
    for (const auto& q : sources_) {
      if (layout_->param_unknown(q.param)) g(layout_->param_offset(q.param)) += q.scale * y.dot(q.values);
    }
    for (const auto& q : products_) {
      if (layout_->field_unknown(q.a)) {
        const Vector v = y.cwiseProduct(q.db.apply(s.field(q.b)));
        g.segment(layout_->field_offset(q.a), n_) += q.scale * q.dat.apply(v);
      }
      if (layout_->field_unknown(q.b)) {
        const Vector v = y.cwiseProduct(q.da.apply(s.field(q.a)));
        g.segment(layout_->field_offset(q.b), n_) += q.scale * q.dbt.apply(v);
      }
    }
    return g;
  }

  void add_curvature(const StateView&, const Vector& y, Matrix& h) const override {
    for (const auto& l : linear_) {
      if (!(layout_->field_unknown(l.field) && layout_->param_unknown(l.param))) continue;
      const Vector cy = l.coeff.size() ? Vector(l.coeff.cwiseProduct(y)) : y;
      const Vector v = l.scale * l.dt.apply(cy);
      const Index fo = layout_->field_offset(l.field);
      const Index po = layout_->param_offset(l.param);
      h.block(fo, po, n_, 1) += v;
      h.block(po, fo, 1, n_) += v.transpose();
    }
    for (const auto& q : products_) {
      if (!(layout_->field_unknown(q.a) && layout_->field_unknown(q.b))) continue;
      // scale * Da^T diag(y) Db and its transpose.
      Matrix t = Matrix::Zero(n_, n_);
      q.db.add_to_dense(t, &y, q.scale);
      const Matrix block = q.dat.apply(t);
      const Index ao = layout_->field_offset(q.a);
      const Index bo = layout_->field_offset(q.b);
      h.block(ao, bo, n_, n_) += block;
      h.block(bo, ao, n_, n_) += block.transpose();
    }
  }

 private:
  struct Lin {
    int field;
    int param;
    double scale;
    KroneckerOperator d;
    Vector coeff;
    KroneckerOperator dt = d.transpose();
    Vector apply(const Vector& u) const {
      Vector v = d.apply(u);
      return coeff.size() ? Vector(v.cwiseProduct(coeff)) : v;
    }
  };
  struct Src {
    int param;
    double scale;
    Vector values;
  };
  struct Prod {
    int a;
    int b;
    double scale;
    KroneckerOperator da;
    KroneckerOperator db;
    KroneckerOperator dat = da.transpose();
    KroneckerOperator dbt = db.transpose();
  };

  const StateLayout* layout_;
  Index n_;
  std::vector<Lin> linear_;
  std::vector<Src> sources_;
  std::vector<Prod> products_;
  bool affine_ = true;
};

/// r = S field - target for a fixed Kronecker selection/evaluation S.
class FieldMapBlock final : public ResidualBlock {
 public:
  FieldMapBlock(std::string block_name, int field, KroneckerOperator s, Vector target, const StateLayout& layout)
      : layout_(&layout), field_(field), s_(std::move(s)), st_(s_.transpose()), target_(std::move(target)) {
    name = std::move(block_name);
    if (s_.rows() != target_.size()) throw std::invalid_argument("FieldMapBlock: target length mismatch");
  }

  Index rows() const override { return s_.rows(); }
  bool affine() const override { return true; }
  const Vector& target() const { return target_; }

  Vector value(const StateView& s) const override { return s_.apply(s.field(field_)) - target_; }

  Matrix jacobian(const StateView&) const override {
    Matrix j = Matrix::Zero(rows(), layout_->size());
    if (layout_->field_unknown(field_)) s_.add_to_dense(j.middleCols(layout_->field_offset(field_), layout_->grid_size()));
    return j;
  }

  Vector jacobian_transpose_apply(const StateView&, const Vector& y) const override {
    Vector g = Vector::Zero(layout_->size());
    if (layout_->field_unknown(field_)) g.segment(layout_->field_offset(field_), layout_->grid_size()) = st_.apply(y);
    return g;
  }

 private:
  const StateLayout* layout_;
  int field_;
  KroneckerOperator s_;
  KroneckerOperator st_;
  Vector target_;
};

/// Differentiable objective used by the solvers.
struct Objective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  /// Exact Hessian (or the best available symmetric approximation).
  std::function<Matrix(const Vector&)> hessian;
  /// Positive semidefinite curvature model; falls back to hessian when empty.
  std::function<Matrix(const Vector&)> gauss_newton;
  bool affine = false;
};

/// Sum of weighted squared residual blocks over a flat state vector.
class AssembledLoss {
 public:
  AssembledLoss(const ProblemSpec& problem, std::shared_ptr<const OperatorCache> ops)
      : ops_(std::move(ops)), layout_(std::make_unique<StateLayout>(problem, ops_->size())) {
    const Matrix& pts = ops_->grid().points();
    for (const auto& f : problem.fields) {
      if (!f.unknown && !f.values) throw std::invalid_argument("known field '" + f.name + "' has no values");
      known_.push_back(f.unknown ? Vector() : sample(f.values, pts));
      field_names_.push_back(f.name);
    }
    for (const auto& p : problem.params) {
      fixed_.push_back(p.value);
      param_names_.push_back(p.name);
    }
  }

  AssembledLoss(const AssembledLoss&) = delete;
  AssembledLoss& operator=(const AssembledLoss&) = delete;
  AssembledLoss(AssembledLoss&&) = default;

  const StateLayout& layout() const { return *layout_; }
  const OperatorCache& operators() const { return *ops_; }
  std::shared_ptr<const OperatorCache> operators_ptr() const { return ops_; }
  Index size() const { return layout_->size(); }
  const std::vector<std::unique_ptr<ResidualBlock>>& blocks() const { return blocks_; }
  const std::vector<std::string>& field_names() const { return field_names_; }
  const std::vector<std::string>& param_names() const { return param_names_; }

  void add_block(std::unique_ptr<ResidualBlock> b) { blocks_.push_back(std::move(b)); }

  bool affine() const {
    return std::all_of(blocks_.begin(), blocks_.end(), [](const auto& b) { return b->affine(); });
  }

  /// Zero fields and the declared initial parameter values.
  Vector initial_guess() const {
    Vector x = Vector::Zero(size());
    for (int p = 0; p < static_cast<int>(fixed_.size()); ++p) {
      if (layout_->param_unknown(p)) x(layout_->param_offset(p)) = fixed_[static_cast<std::size_t>(p)];
    }
    return x;
  }

  Vector field_values(const Vector& x, int f) const { return view(x).field(f); }
  double param_value(const Vector& x, int p) const { return view(x).param(p); }

  double value(const Vector& x) const {
    check(x);
    const StateView s = view(x);
    double total = 0.0;
    for (const auto& b : blocks_) {
      const Vector r = b->value(s);
      total += b->term_weight * (b->weight ? b->weight->whiten(r).squaredNorm() : r.squaredNorm());
    }
    return total;
  }

  /// Loss value of each block, in block order.
  std::vector<double> block_values(const Vector& x) const {
    const StateView s = view(x);
    std::vector<double> out;
    for (const auto& b : blocks_) {
      const Vector r = b->value(s);
      out.push_back(b->term_weight * (b->weight ? b->weight->whiten(r).squaredNorm() : r.squaredNorm()));
    }
    return out;
  }

  Vector gradient(const Vector& x) const {
    check(x);
    const StateView s = view(x);
    Vector g = Vector::Zero(size());
    for (const auto& b : blocks_) {
      const Vector r = b->value(s);
      g += b->jacobian_transpose_apply(s, 2.0 * b->term_weight * b->weighted(r));
    }
    return g;
  }

  /// 2 sum lambda J^T M J, the exact Hessian when every block is affine.
  Matrix gauss_newton_hessian(const Vector& x) const {
    check(x);
    const StateView s = view(x);
    const Index nx = size();
    Matrix h = Matrix::Zero(nx, nx);
    constexpr Index chunk = 256;
    for (const auto& b : blocks_) {
      Matrix j = b->jacobian(s);
      for (Index c = 0; c < nx; c += chunk) {
        const Index w = std::min(chunk, nx - c);
        j.middleCols(c, w) = b->whitened(j.middleCols(c, w));
      }
      h.selfadjointView<Eigen::Lower>().rankUpdate(j.transpose(), 2.0 * b->term_weight);
    }
    h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
    return h;
  }

  /// Gauss-Newton part plus the residual curvature sum (M r)_k Hess(r_k).
  Matrix hessian(const Vector& x) const {
    Matrix h = gauss_newton_hessian(x);
    const StateView s = view(x);
    for (const auto& b : blocks_) {
      if (b->affine()) continue;
      const Vector y = 2.0 * b->term_weight * b->weighted(b->value(s));
      b->add_curvature(s, y, h);
    }
    return h;
  }

  struct NormalEquations {
    Matrix kk;   ///< Hessian of the loss
    Vector rhs;  ///< gradient(x) = kk x - 2 rhs
  };

  NormalEquations normal_equations() const {
    if (!affine()) throw std::logic_error("normal_equations: loss is not affine in the unknowns");
    const Vector zero = Vector::Zero(size());
    return NormalEquations{gauss_newton_hessian(zero), -0.5 * gradient(zero)};
  }

  Objective objective() const {
    Objective o;
    o.value = [this](const Vector& x) { return value(x); };
    o.gradient = [this](const Vector& x) { return gradient(x); };
    o.hessian = [this](const Vector& x) { return hessian(x); };
    o.gauss_newton = [this](const Vector& x) { return gauss_newton_hessian(x); };
    o.affine = affine();
    return o;
  }

 private:
  StateView view(const Vector& x) const { return StateView{layout_.get(), &known_, &fixed_, &x}; }
  void check(const Vector& x) const {
    if (x.size() != size()) throw std::invalid_argument("AssembledLoss: state vector has wrong length");
  }

  std::shared_ptr<const OperatorCache> ops_;
  std::unique_ptr<StateLayout> layout_;
  std::vector<Vector> known_;
  std::vector<double> fixed_;
  std::vector<std::string> field_names_;
  std::vector<std::string> param_names_;
  std::vector<std::unique_ptr<ResidualBlock>> blocks_;
};

namespace detail {

inline WeightPtr metric_weight(const OperatorCache& ops, const MetricChoice& c, bool dense) {
  WeightPtr w = ops.sobolev_weight(c.k, c.variant, dense && c.k != 0);
  if (c.mode == LossMode::Weak) w = std::make_shared<SquaredWeight>(w);
  return w;
}

}  // namespace detail

/// Overrides for data-term samples, by field name (values on the domain grid).
using DataOverrides = std::map<std::string, Vector>;

/// Builds the loss of a problem at the given degrees.
inline AssembledLoss assemble_loss(const ProblemSpec& problem, const LossSpec& spec, std::shared_ptr<const OperatorCache> ops,
                                   int n_boundary, const DataOverrides& data = {}) {
  if (ops->dimension() != problem.m) throw std::invalid_argument("assemble_loss: operator cache dimension mismatch");
  if (!(ops->grid().box() == problem.box)) throw std::invalid_argument("assemble_loss: operator cache box mismatch");
  AssembledLoss loss(problem, ops);
  const StateLayout& layout = loss.layout();
  const OperatorCache& o = *ops;

  const WeightPtr pde_w = detail::metric_weight(o, spec.pde, spec.dense_weights);
  const WeightPtr aux_w = detail::metric_weight(o, spec.aux, spec.dense_weights);
  for (const auto& eq : problem.equations) {
    auto b = std::make_unique<EquationBlock>(eq, problem, o, layout);
    b->name = (eq.constraint ? "constraint:" : "pde:") + eq.name;
    b->weight = eq.constraint ? aux_w : pde_w;
    b->term_weight = eq.constraint ? spec.constraint_weight : spec.pde_weight;
    loss.add_block(std::move(b));
  }

  if (!problem.boundary.empty()) {
    if (n_boundary < 0) throw std::invalid_argument("assemble_loss: boundary degree must be >= 0");
    const auto traces = o.traces(n_boundary);
    for (const auto& bc : problem.boundary) {
      if (!layout.field_unknown(bc.field)) continue;
      for (const auto& tr : traces) {
        WeightPtr w;
        if (spec.aux.k == 0 || problem.m == 1) {
          w = std::make_shared<DiagonalWeight>(tr.face.grid.weights());
          if (spec.aux.mode == LossMode::Weak) w = std::make_shared<SquaredWeight>(w);
        } else {
          const OperatorCache fo(tr.face.grid);
          w = detail::metric_weight(fo, spec.aux, spec.dense_weights);
        }
        const Vector g = sample(bc.g, tr.face.embedded_points());
        auto b = std::make_unique<FieldMapBlock>(
            "boundary:" + problem.fields[static_cast<std::size_t>(bc.field)].name + ":" + std::to_string(tr.face.axis) +
                (tr.face.side < 0 ? "-" : "+"),
            bc.field, tr.on_values, g, layout);
        b->weight = std::move(w);
        b->term_weight = spec.boundary_weight;
        loss.add_block(std::move(b));
      }
    }
  }

  for (const auto& d : problem.data) {
    const std::string& fname = problem.fields[static_cast<std::size_t>(d.field)].name;
    Vector target;
    if (auto it = data.find(fname); it != data.end()) {
      target = it->second;
      if (target.size() != o.size()) throw std::invalid_argument("data for field '" + fname + "' has wrong length");
    } else {
      if (!d.data) throw std::invalid_argument("missing data for field '" + fname + "'");
      target = sample(d.data, o.grid().points());
    }
    std::vector<Matrix> id;
    for (int i = 0; i < problem.m; ++i) id.push_back(Matrix::Identity(o.degree() + 1, o.degree() + 1));
    auto b = std::make_unique<FieldMapBlock>("data:" + fname, d.field, KroneckerOperator(std::move(id)), target, layout);
    b->weight = aux_w;
    b->term_weight = spec.data_weight;
    loss.add_block(std::move(b));
  }

  for (const auto& pin : problem.pins) {
    std::vector<Matrix> sel;
    for (int i = 0; i < problem.m; ++i) {
      Matrix e = Matrix::Zero(1, o.degree() + 1);
      e(0, 0) = 1.0;
      sel.push_back(e);
    }
    const auto p0 = o.grid().point(0);
    Vector target(1);
    target(0) = pin.value(std::span<const double>(p0));
    auto b = std::make_unique<FieldMapBlock>("pin:" + problem.fields[static_cast<std::size_t>(pin.field)].name, pin.field,
                                             KroneckerOperator(std::move(sel)), target, layout);
    b->term_weight = spec.pin_weight;
    loss.add_block(std::move(b));
  }
  return loss;
}

inline AssembledLoss assemble_loss(const ProblemSpec& problem, const LossSpec& spec, int n_domain, int n_boundary,
                                   const DataOverrides& data = {}, const Limits& limits = default_limits()) {
  auto ops = std::make_shared<const OperatorCache>(TensorGrid(n_domain, problem.box, limits), limits);
  return assemble_loss(problem, spec, std::move(ops), n_boundary, data);
}

inline AssembledLoss assemble_strong_loss(const ProblemSpec& problem, LossSpec spec, int n_domain, int n_boundary) {
  spec.pde.mode = LossMode::Strong;
  return assemble_loss(problem, spec, n_domain, n_boundary);
}

inline AssembledLoss assemble_weak_loss(const ProblemSpec& problem, LossSpec spec, int n_domain, int n_boundary) {
  spec.pde.mode = LossMode::Weak;
  spec.aux.mode = LossMode::Weak;
  return assemble_loss(problem, spec, n_domain, n_boundary);
}

/// Inverse problems: data samples on the domain grid are required for every data term.
inline AssembledLoss assemble_inverse_loss(const ProblemSpec& problem, const DataOverrides& data, const LossSpec& spec,
                                           int n_domain, int n_boundary) {
  if (problem.data.empty()) throw std::invalid_argument("assemble_inverse_loss: problem has no data terms");
  for (const auto& d : problem.data) {
    const auto& fname = problem.fields[static_cast<std::size_t>(d.field)].name;
    if (!data.count(fname) && !d.data) throw std::invalid_argument("assemble_inverse_loss: missing data vector for '" + fname + "'");
  }
  return assemble_loss(problem, spec, n_domain, n_boundary, data);
}

}  // namespace psm

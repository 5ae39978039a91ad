#pragma once

#include "psm/basis.hpp"
#include "psm/core.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace psm {

/// A scalar field on the domain. Unknown fields are solved for; known fields
/// enter residuals through their samples on the domain grid.
struct FieldDecl {
  std::string name;
  bool unknown = true;
  Field values;  ///< required for known fields
};

struct ParamDecl {
  std::string name;
  bool unknown = false;
  double value = 0.0;  ///< fixed value, or the initial guess when unknown
};

/// scale * [param] * coefficient(x) * D_beta field
struct LinearTerm {
  int field = 0;
  MultiIndex beta;
  Field coefficient;  ///< empty means 1
  double scale = 1.0;
  int param = -1;
};

/// scale * [param] * values(x)
struct SourceTerm {
  Field values;
  double scale = 1.0;
  int param = -1;
};

/// scale * (D_beta_a field_a) * (D_beta_b field_b), pointwise
struct ProductTerm {
  int field_a = 0;
  MultiIndex beta_a;
  int field_b = 0;
  MultiIndex beta_b;
  double scale = 1.0;
};

/// One pointwise residual on the domain grid: the sum of its terms.
/// Equations flagged as constraints are measured in the auxiliary metric.
struct Equation {
  std::string name;
  std::vector<LinearTerm> linear;
  std::vector<SourceTerm> sources;
  std::vector<ProductTerm> products;
  bool constraint = false;
};

/// field = g on every face of the box.
struct DirichletCondition {
  int field = 0;
  Field g;
};

/// field = data on the domain grid (inverse problems).
struct DataTerm {
  int field = 0;
  Field data;
};

/// field(p) = value at the first domain grid point (gauge fixing).
struct PinTerm {
  int field = 0;
  Field value;
};

struct ProblemSpec {
  std::string name;
  int m = 1;
  Box box;
  std::vector<FieldDecl> fields;
  std::vector<ParamDecl> params;
  std::vector<Equation> equations;
  std::vector<DirichletCondition> boundary;
  std::vector<DataTerm> data;
  std::vector<PinTerm> pins;
  /// Exact solutions by field name and exact parameter values, when known.
  std::map<std::string, Field> ground_truth;
  std::map<std::string, double> param_truth;
  std::map<std::string, std::string> notes;

  int field_index(const std::string& n) const {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].name == n) return static_cast<int>(i);
    }
    throw std::invalid_argument("unknown field '" + n + "'");
  }

  int param_index(const std::string& n) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].name == n) return static_cast<int>(i);
    }
    throw std::invalid_argument("unknown parameter '" + n + "'");
  }

  bool has_unknown_params() const {
    for (const auto& p : params) {
      if (p.unknown) return true;
    }
    return false;
  }

  /// True when every residual is affine in the unknowns.
  bool is_linear() const {
    auto unknown_field = [&](int f) { return fields.at(static_cast<std::size_t>(f)).unknown; };
    auto unknown_param = [&](int p) { return p >= 0 && params.at(static_cast<std::size_t>(p)).unknown; };
    for (const auto& eq : equations) {
      for (const auto& t : eq.linear) {
        if (unknown_field(t.field) && unknown_param(t.param)) return false;
      }
      for (const auto& t : eq.products) {
        if (unknown_field(t.field_a) && unknown_field(t.field_b)) return false;
      }
    }
    return true;
  }
};

}  // namespace psm

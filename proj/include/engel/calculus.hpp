#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "engel/chart.hpp"
#include "engel/expr.hpp"

namespace engel {

/// Vector field on a chart: one component per coordinate.
class VectorField {
public:
  VectorField(ChartPtr chart, std::vector<ScalarExpr> components);

  static VectorField zero(ChartPtr chart);
  /// The coordinate field d/d(name).
  static VectorField coordinate(ChartPtr chart, const std::string& name);
  /// Parse one component expression per coordinate.
  static VectorField parse(ChartPtr chart, const std::vector<std::string>& components);

  const ChartPtr& chart() const noexcept { return chart_; }
  std::size_t dim() const noexcept { return components_.size(); }
  const ScalarExpr& operator[](std::size_t i) const { return components_.at(i); }
  const std::vector<ScalarExpr>& components() const noexcept { return components_; }

  CompiledExprs compile() const;
  std::vector<double> at(std::span<const double> point) const;

  VectorField simplified() const;
  VectorField substitute(const std::map<std::string, ScalarExpr>& values) const;

  friend VectorField operator+(const VectorField& a, const VectorField& b);
  friend VectorField operator-(const VectorField& a, const VectorField& b);
  friend VectorField operator*(const ScalarExpr& f, const VectorField& v);

private:
  ChartPtr chart_;
  std::vector<ScalarExpr> components_;
};

/// Bitmask over coordinate indices; bit i set means dx^i is a factor.
/// Equivalent to a strictly increasing index tuple.
using IndexSet = unsigned;

std::vector<std::size_t> indices_of(IndexSet s);
IndexSet index_set(std::initializer_list<std::size_t> indices);
int degree_of(IndexSet s);

/// Differential k-form stored sparsely over increasing index tuples.
class KForm {
public:
  KForm(ChartPtr chart, int degree);
  KForm(ChartPtr chart, int degree, std::map<IndexSet, ScalarExpr> coefficients);

  /// 1-form sum_i c_i dx^i.
  static KForm one_form(ChartPtr chart, const std::vector<ScalarExpr>& coefficients);
  static KForm scalar(ChartPtr chart, const ScalarExpr& f);
  /// f dx^{i1} ^ ... ^ dx^{ik} for the given coordinate names (any order).
  static KForm monomial(ChartPtr chart, const ScalarExpr& f, const std::vector<std::string>& names);
  /// Parse a 1-form written like "dy - z*dx" (linear in the differentials).
  static KForm parse_one_form(ChartPtr chart, std::string_view text);

  const ChartPtr& chart() const noexcept { return chart_; }
  int degree() const noexcept { return degree_; }
  const std::map<IndexSet, ScalarExpr>& coefficients() const noexcept { return coeffs_; }
  ScalarExpr coefficient(IndexSet s) const;
  ScalarExpr coefficient(const std::vector<std::string>& names) const;

  /// Coefficients in ascending IndexSet order over every k-subset (zeros
  /// included), suitable for pointwise norms.
  std::vector<ScalarExpr> dense() const;

  KForm simplified() const;
  KForm substitute(const std::map<std::string, ScalarExpr>& values) const;
  bool is_zero() const;

  std::string to_string() const;

  friend KForm operator+(const KForm& a, const KForm& b);
  friend KForm operator-(const KForm& a, const KForm& b);
  friend KForm operator*(const ScalarExpr& f, const KForm& w);

private:
  ChartPtr chart_;
  int degree_;
  std::map<IndexSet, ScalarExpr> coeffs_;
};

/// X(f) = sum_j X^j df/dx^j.
ScalarExpr directional_derivative(const VectorField& x, const ScalarExpr& f);

VectorField lie_bracket(const VectorField& x, const VectorField& y);

/// Lie bracket with every partial derivative replaced by a central
/// difference of step h. Independent of the symbolic path.
std::vector<double> fd_lie_bracket(const VectorField& x, const VectorField& y,
                                   std::span<const double> point, double h);

KForm exterior_derivative(const KForm& w);
KForm wedge(const KForm& a, const KForm& b);
KForm interior_product(const VectorField& x, const KForm& w);
/// Cartan formula: X _| dw + d(X _| w).
KForm lie_derivative_form(const VectorField& x, const KForm& w);

/// Value of a 1-form on a vector field.
ScalarExpr pairing(const KForm& one_form, const VectorField& x);

/// Maximum over points and periodic coordinates of |f(p + period e_i) - f(p)|.
double period_defect(const Chart& chart, std::span<const ScalarExpr> exprs,
                     std::span<const Point> points);

}  // namespace engel

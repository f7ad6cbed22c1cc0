#include "engel/calculus.hpp"

#include <bit>
#include <cmath>
#include <random>

#include "engel/error.hpp"

namespace engel {

namespace {

void require_same_chart(const ChartPtr& a, const ChartPtr& b, const char* op) {
  if (a != b && !(*a == *b)) throw ChartMismatch(std::string(op) + ": operands live on different charts");
}

void require_vars_in_chart(const Chart& chart, const ScalarExpr& e) {
  for (const auto& v : e.free_variables())
    if (!chart.index_of(v)) throw PreconditionError("'" + v + "' is not a coordinate of the chart");
}

// Sign of dx^A ^ dx^B after sorting into increasing order.
int wedge_sign(IndexSet a, IndexSet b) {
  int swaps = 0;
  for (std::size_t i : indices_of(a)) swaps += std::popcount(b & ((1u << i) - 1u));
  return swaps % 2 == 0 ? 1 : -1;
}

void accumulate(std::map<IndexSet, ScalarExpr>& into, IndexSet s, const ScalarExpr& v) {
  auto it = into.find(s);
  if (it == into.end()) {
    into.emplace(s, v);
  } else {
    it->second = it->second + v;
  }
}

std::map<IndexSet, ScalarExpr> drop_zeros(std::map<IndexSet, ScalarExpr> m) {
  std::erase_if(m, [](const auto& kv) { return kv.second.is_zero(); });
  return m;
}

}  // namespace

// ---- VectorField ----

VectorField::VectorField(ChartPtr chart, std::vector<ScalarExpr> components)
    : chart_(std::move(chart)), components_(std::move(components)) {
  if (components_.size() != chart_->dim())
    throw PreconditionError("vector field needs " + std::to_string(chart_->dim()) + " components");
  for (const auto& c : components_) require_vars_in_chart(*chart_, c);
}

VectorField VectorField::zero(ChartPtr chart) {
  std::vector<ScalarExpr> comps(chart->dim(), ScalarExpr::constant(0.0));
  return VectorField(std::move(chart), std::move(comps));
}

VectorField VectorField::coordinate(ChartPtr chart, const std::string& name) {
  std::size_t k = chart->require_index(name);
  std::vector<ScalarExpr> comps(chart->dim(), ScalarExpr::constant(0.0));
  comps[k] = ScalarExpr::constant(1.0);
  return VectorField(std::move(chart), std::move(comps));
}

VectorField VectorField::parse(ChartPtr chart, const std::vector<std::string>& components) {
  if (components.size() != chart->dim())
    throw PreconditionError("vector field needs " + std::to_string(chart->dim()) + " components, got " +
                            std::to_string(components.size()));
  auto vars = chart->name_set();
  std::vector<ScalarExpr> comps;
  for (const auto& text : components) comps.push_back(parse_scalar_expr(text, vars));
  return VectorField(std::move(chart), std::move(comps));
}

CompiledExprs VectorField::compile() const { return CompiledExprs(components_, chart_->names()); }

std::vector<double> VectorField::at(std::span<const double> point) const {
  return compile().evaluate(point);
}

VectorField VectorField::simplified() const {
  std::vector<ScalarExpr> comps;
  for (const auto& c : components_) comps.push_back(simplify(c));
  return VectorField(chart_, std::move(comps));
}

VectorField VectorField::substitute(const std::map<std::string, ScalarExpr>& values) const {
  std::vector<ScalarExpr> comps;
  for (const auto& c : components_) comps.push_back(c.substitute(values));
  return VectorField(chart_, std::move(comps));
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  require_same_chart(a.chart_, b.chart_, "vector field sum");
  std::vector<ScalarExpr> comps;
  for (std::size_t i = 0; i < a.dim(); ++i) comps.push_back(a[i] + b[i]);
  return VectorField(a.chart_, std::move(comps));
}

VectorField operator-(const VectorField& a, const VectorField& b) {
  require_same_chart(a.chart_, b.chart_, "vector field difference");
  std::vector<ScalarExpr> comps;
  for (std::size_t i = 0; i < a.dim(); ++i) comps.push_back(a[i] - b[i]);
  return VectorField(a.chart_, std::move(comps));
}

VectorField operator*(const ScalarExpr& f, const VectorField& v) {
  std::vector<ScalarExpr> comps;
  for (const auto& c : v.components_) comps.push_back(f * c);
  return VectorField(v.chart_, std::move(comps));
}

// ---- index sets ----

std::vector<std::size_t> indices_of(IndexSet s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; s != 0; ++i, s >>= 1)
    if (s & 1u) out.push_back(i);
  return out;
}

IndexSet index_set(std::initializer_list<std::size_t> indices) {
  IndexSet s = 0;
  for (std::size_t i : indices) s |= 1u << i;
  return s;
}

int degree_of(IndexSet s) { return std::popcount(s); }

// ---- KForm ----

KForm::KForm(ChartPtr chart, int degree) : chart_(std::move(chart)), degree_(degree) {
  if (degree_ < 0 || degree_ > static_cast<int>(chart_->dim()))
    throw DegreeOverflow("form degree " + std::to_string(degree_) + " exceeds chart dimension");
}

KForm::KForm(ChartPtr chart, int degree, std::map<IndexSet, ScalarExpr> coefficients)
    : KForm(std::move(chart), degree) {
  for (const auto& [s, c] : coefficients) {
    if (degree_of(s) != degree_ || (s >> chart_->dim()) != 0)
      throw PreconditionError("index set does not match form degree");
    require_vars_in_chart(*chart_, c);
  }
  coeffs_ = drop_zeros(std::move(coefficients));
}

KForm KForm::one_form(ChartPtr chart, const std::vector<ScalarExpr>& coefficients) {
  if (coefficients.size() != chart->dim()) throw PreconditionError("1-form needs one coefficient per coordinate");
  std::map<IndexSet, ScalarExpr> m;
  for (std::size_t i = 0; i < coefficients.size(); ++i) m.emplace(1u << i, coefficients[i]);
  return KForm(std::move(chart), 1, std::move(m));
}

KForm KForm::scalar(ChartPtr chart, const ScalarExpr& f) {
  return KForm(std::move(chart), 0, {{0u, f}});
}

KForm KForm::monomial(ChartPtr chart, const ScalarExpr& f, const std::vector<std::string>& names) {
  // Build as a wedge of coordinate differentials so the sign is bookkept.
  KForm acc = scalar(chart, f);
  for (const auto& n : names) {
    std::size_t k = chart->require_index(n);
    acc = wedge(acc, KForm(chart, 1, {{1u << k, ScalarExpr::constant(1.0)}}));
  }
  return acc;
}

KForm KForm::parse_one_form(ChartPtr chart, std::string_view text) {
  std::set<std::string> vars = chart->name_set();
  std::vector<std::string> diffs;
  for (const auto& n : chart->names()) {
    std::string d = "d" + n;
    if (vars.contains(d)) throw PreconditionError("differential symbol '" + d + "' clashes with a coordinate");
    diffs.push_back(d);
  }
  std::set<std::string> allowed = vars;
  allowed.insert(diffs.begin(), diffs.end());
  ScalarExpr e = parse_scalar_expr(text, allowed);

  std::vector<ScalarExpr> coeffs;
  for (const auto& d : diffs) {
    ScalarExpr c = simplify(partial_derivative(e, d));
    for (const auto& v : c.free_variables())
      if (v.starts_with("d") && std::find(diffs.begin(), diffs.end(), v) != diffs.end())
        throw PreconditionError("1-form '" + std::string(text) + "' is not linear in the differentials");
    coeffs.push_back(c);
  }
  // Remainder must vanish: e == sum c_i d_i.
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 8; ++trial) {
    VarBinding b;
    for (const auto& n : chart->names()) b[n] = u(rng);
    for (const auto& d : diffs) b[d] = u(rng);
    double lhs = evaluate(e, b);
    double rhs = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i) rhs += evaluate(coeffs[i], b) * b[diffs[i]];
    if (std::abs(lhs - rhs) > 1e-9 * (1.0 + std::abs(lhs)))
      throw PreconditionError("1-form '" + std::string(text) + "' is not linear in the differentials");
  }
  return one_form(std::move(chart), coeffs);
}

ScalarExpr KForm::coefficient(IndexSet s) const {
  auto it = coeffs_.find(s);
  return it == coeffs_.end() ? ScalarExpr::constant(0.0) : it->second;
}

ScalarExpr KForm::coefficient(const std::vector<std::string>& names) const {
  KForm probe = monomial(chart_, ScalarExpr::constant(1.0), names);
  if (probe.coeffs_.empty()) return ScalarExpr::constant(0.0);
  auto [s, sign] = *probe.coeffs_.begin();
  return sign.is_constant(1.0) ? coefficient(s) : -coefficient(s);
}

std::vector<ScalarExpr> KForm::dense() const {
  std::vector<ScalarExpr> out;
  const unsigned full = 1u << chart_->dim();
  for (IndexSet s = 0; s < full; ++s)
    if (degree_of(s) == degree_) out.push_back(coefficient(s));
  return out;
}

KForm KForm::simplified() const {
  std::map<IndexSet, ScalarExpr> m;
  for (const auto& [s, c] : coeffs_) m.emplace(s, simplify(c));
  return KForm(chart_, degree_, std::move(m));
}

KForm KForm::substitute(const std::map<std::string, ScalarExpr>& values) const {
  std::map<IndexSet, ScalarExpr> m;
  for (const auto& [s, c] : coeffs_) m.emplace(s, c.substitute(values));
  return KForm(chart_, degree_, std::move(m));
}

bool KForm::is_zero() const { return coeffs_.empty(); }

std::string KForm::to_string() const {
  if (coeffs_.empty()) return "0";
  std::string out;
  for (const auto& [s, c] : coeffs_) {
    if (!out.empty()) out += " + ";
    out += "(" + c.to_string() + ")";
    for (std::size_t i : indices_of(s)) out += (out.back() == ')' ? " " : "^") + std::string("d") + chart_->names()[i];
  }
  return out;
}

KForm operator+(const KForm& a, const KForm& b) {
  require_same_chart(a.chart_, b.chart_, "form sum");
  if (a.degree_ != b.degree_) throw PreconditionError("form sum: degree mismatch");
  auto m = a.coeffs_;
  for (const auto& [s, c] : b.coeffs_) accumulate(m, s, c);
  return KForm(a.chart_, a.degree_, std::move(m));
}

KForm operator-(const KForm& a, const KForm& b) {
  return a + (ScalarExpr::constant(-1.0) * b);
}

KForm operator*(const ScalarExpr& f, const KForm& w) {
  std::map<IndexSet, ScalarExpr> m;
  for (const auto& [s, c] : w.coeffs_) m.emplace(s, f * c);
  return KForm(w.chart_, w.degree_, std::move(m));
}

// ---- operations ----

ScalarExpr directional_derivative(const VectorField& x, const ScalarExpr& f) {
  ScalarExpr acc = ScalarExpr::constant(0.0);
  const auto& names = x.chart()->names();
  for (std::size_t j = 0; j < x.dim(); ++j) {
    if (x[j].is_zero()) continue;
    acc = acc + x[j] * partial_derivative(f, names[j]);
  }
  return acc;
}

VectorField lie_bracket(const VectorField& x, const VectorField& y) {
  require_same_chart(x.chart(), y.chart(), "lie_bracket");
  std::vector<ScalarExpr> comps;
  for (std::size_t i = 0; i < x.dim(); ++i)
    comps.push_back(simplify(directional_derivative(x, y[i]) - directional_derivative(y, x[i])));
  return VectorField(x.chart(), std::move(comps));
}

std::vector<double> fd_lie_bracket(const VectorField& x, const VectorField& y,
                                   std::span<const double> point, double h) {
  require_same_chart(x.chart(), y.chart(), "fd_lie_bracket");
  if (!(h > 0.0)) throw PreconditionError("finite-difference step must be positive");
  const std::size_t n = x.dim();
  CompiledExprs cx = x.compile();
  CompiledExprs cy = y.compile();
  std::vector<double> xp = cx.evaluate(point);
  std::vector<double> yp = cy.evaluate(point);
  std::vector<double> out(n, 0.0);
  Point q(point.begin(), point.end());
  for (std::size_t j = 0; j < n; ++j) {
    const double c = q[j];
    q[j] = c + h;
    auto xf = cx.evaluate(q);
    auto yf = cy.evaluate(q);
    q[j] = c - h;
    auto xb = cx.evaluate(q);
    auto yb = cy.evaluate(q);
    q[j] = c;
    for (std::size_t i = 0; i < n; ++i) {
      double dyi = (yf[i] - yb[i]) / (2 * h);
      double dxi = (xf[i] - xb[i]) / (2 * h);
      out[i] += xp[j] * dyi - yp[j] * dxi;
    }
  }
  return out;
}

KForm exterior_derivative(const KForm& w) {
  const auto& chart = w.chart();
  if (w.degree() >= static_cast<int>(chart->dim()))
    throw DegreeOverflow("exterior derivative of a top-degree form");
  std::map<IndexSet, ScalarExpr> m;
  for (const auto& [s, c] : w.coefficients()) {
    for (std::size_t j = 0; j < chart->dim(); ++j) {
      if (s & (1u << j)) continue;
      ScalarExpr dc = partial_derivative(c, chart->names()[j]);
      if (dc.is_zero()) continue;
      int sign = std::popcount(s & ((1u << j) - 1u)) % 2 == 0 ? 1 : -1;
      accumulate(m, s | (1u << j), sign > 0 ? dc : -dc);
    }
  }
  for (auto& [s, c] : m) c = simplify(c);
  return KForm(chart, w.degree() + 1, drop_zeros(std::move(m)));
}

KForm wedge(const KForm& a, const KForm& b) {
  require_same_chart(a.chart(), b.chart(), "wedge");
  int deg = a.degree() + b.degree();
  if (deg > static_cast<int>(a.chart()->dim())) throw DegreeOverflow("wedge degree exceeds chart dimension");
  std::map<IndexSet, ScalarExpr> m;
  for (const auto& [sa, ca] : a.coefficients()) {
    for (const auto& [sb, cb] : b.coefficients()) {
      if (sa & sb) continue;
      ScalarExpr prod = ca * cb;
      accumulate(m, sa | sb, wedge_sign(sa, sb) > 0 ? prod : -prod);
    }
  }
  for (auto& [s, c] : m) c = simplify(c);
  return KForm(a.chart(), deg, drop_zeros(std::move(m)));
}

KForm interior_product(const VectorField& x, const KForm& w) {
  require_same_chart(x.chart(), w.chart(), "interior_product");
  if (w.degree() < 1) throw DegreeOverflow("interior product of a 0-form");
  std::map<IndexSet, ScalarExpr> m;
  for (const auto& [s, c] : w.coefficients()) {
    auto idx = indices_of(s);
    for (std::size_t p = 0; p < idx.size(); ++p) {
      const ScalarExpr& xi = x[idx[p]];
      if (xi.is_zero()) continue;
      ScalarExpr term = xi * c;
      accumulate(m, s & ~(1u << idx[p]), p % 2 == 0 ? term : -term);
    }
  }
  for (auto& [s, c] : m) c = simplify(c);
  return KForm(w.chart(), w.degree() - 1, drop_zeros(std::move(m)));
}

KForm lie_derivative_form(const VectorField& x, const KForm& w) {
  require_same_chart(x.chart(), w.chart(), "lie_derivative_form");
  const int top = static_cast<int>(w.chart()->dim());
  KForm result(w.chart(), w.degree());
  if (w.degree() < top) result = interior_product(x, exterior_derivative(w));
  if (w.degree() >= 1) result = result + exterior_derivative(interior_product(x, w));
  return result.simplified();
}

ScalarExpr pairing(const KForm& one_form, const VectorField& x) {
  if (one_form.degree() != 1) throw PreconditionError("pairing needs a 1-form");
  return interior_product(x, one_form).coefficient(0u);
}

double period_defect(const Chart& chart, std::span<const ScalarExpr> exprs,
                     std::span<const Point> points) {
  CompiledExprs compiled(exprs, chart.names());
  double worst = 0.0;
  for (std::size_t i = 0; i < chart.dim(); ++i) {
    const auto& c = chart.coord(i);
    if (!c.periodic) continue;
    for (const auto& p : points) {
      Point q = p;
      q[i] += c.period;
      auto a = compiled.evaluate(p);
      auto b = compiled.evaluate(q);
      for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
    }
  }
  return worst;
}

}  // namespace engel

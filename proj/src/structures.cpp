#include "engel/structures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "engel/error.hpp"
#include "engel/linalg.hpp"

namespace engel {

namespace {

using Components = std::vector<ScalarExpr>;

void require_dim(const Chart& chart, std::size_t dim, const char* what) {
  if (chart.dim() != dim) {
    throw PreconditionError(std::string(what) + " needs a " + std::to_string(dim) + "-dimensional chart, got " +
                            std::to_string(chart.dim()));
  }
}

void require_same_chart(const ChartPtr& a, const ChartPtr& b) {
  if (a != b && !(*a == *b)) throw ChartMismatch("objects live on different charts");
}

std::string point_string(const Point& p) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ')';
  return os.str();
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

class Sampler {
public:
  Sampler(const Chart& chart, const std::vector<Components>& groups) : names_(chart.names()) {
    for (const auto& g : groups) sizes_.push_back(g.size());
    std::vector<ScalarExpr> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    compiled_.emplace(std::span<const ScalarExpr>(all), std::span<const std::string>(names_));
  }

  /// Values of every group at p.
  std::vector<std::vector<double>> at(const Point& p) const {
    std::vector<double> flat = compiled_->evaluate(p);
    std::vector<std::vector<double>> out;
    std::size_t k = 0;
    for (std::size_t n : sizes_) {
      out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(k), flat.begin() + static_cast<std::ptrdiff_t>(k + n));
      k += n;
    }
    return out;
  }

private:
  std::vector<std::string> names_;
  std::vector<std::size_t> sizes_;
  std::optional<CompiledExprs> compiled_;
};

void summarize(CheckResult& r) {
  if (r.values.empty()) return;
  auto [lo, hi] = std::minmax_element(r.values.begin(), r.values.end());
  r.min = *lo;
  r.max = *hi;
}

// Magnitude of `target` relative to the product of the factor norms.
// Never-vanishing: |v(p)| >= nv * max|v| and max|v| above the zero floor.
// Identically zero: |v(p)| <= zero * S with S the largest factor product.
CheckResult magnitude_check(const std::string& name, CheckKind kind, const Components& target,
                            const std::vector<Components>& factors, const Chart& chart,
                            const std::vector<Point>& points, const Tolerances& tol) {
  std::vector<Components> groups{target};
  groups.insert(groups.end(), factors.begin(), factors.end());
  Sampler sampler(chart, groups);

  CheckResult r;
  r.name = name;
  r.kind = kind;
  for (const Point& p : points) {
    auto vals = sampler.at(p);
    r.values.push_back(norm(vals[0]));
    double s = 1.0;
    for (std::size_t i = 1; i < vals.size(); ++i) s *= norm(vals[i]);
    r.scale = std::max(r.scale, s);
  }
  summarize(r);

  if (kind == CheckKind::NeverVanishing) {
    r.relative_min = r.max > 0.0 ? r.min / r.max : 0.0;
    bool degenerate = !(r.max > tol.zero * r.scale) || r.max == 0.0;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      if (degenerate || r.values[i] < tol.nv * r.max) {
        r.first_failure = i;
        break;
      }
    }
  } else {
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      if (r.values[i] > tol.zero * r.scale) {
        r.first_failure = i;
        break;
      }
    }
  }
  r.pass = !r.first_failure && !r.values.empty();
  if (r.values.empty()) r.first_failure.reset();
  return r;
}

Components form_components(const KForm& w) { return w.dense(); }

// Numerical rank of the column matrix at every sample.
CheckResult rank_check(const std::string& name, const std::vector<Components>& columns, int expected,
                       const Chart& chart, const std::vector<Point>& points, const Tolerances& tol) {
  Sampler sampler(chart, columns);
  CheckResult r;
  r.name = name;
  r.kind = CheckKind::Rank;
  r.expected_rank = expected;
  const auto rows = static_cast<Eigen::Index>(chart.dim());
  for (std::size_t k = 0; k < points.size(); ++k) {
    auto vals = sampler.at(points[k]);
    Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(vals.size()));
    for (std::size_t c = 0; c < vals.size(); ++c)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, static_cast<Eigen::Index>(c)) = vals[c][static_cast<std::size_t>(i)];
    Eigen::VectorXd sigma = singular_values(m);
    int rank = numerical_rank(sigma, tol.rank);
    r.ranks.push_back(rank);
    double ratio = 0.0;
    if (sigma.size() >= expected && expected > 0 && sigma(0) > 0.0) ratio = sigma(expected - 1) / sigma(0);
    r.values.push_back(ratio);
    if (rank != expected && !r.first_failure) r.first_failure = k;
  }
  summarize(r);
  r.pass = !r.first_failure && !points.empty();
  return r;
}

bool has_periodic(const Chart& chart) {
  return std::any_of(chart.coords().begin(), chart.coords().end(), [](const Coordinate& c) { return c.periodic; });
}

// Largest principal angle between span(columns) at p and at p + period e_i.
CheckResult span_period_check(const std::string& name, const std::vector<Components>& columns, const Chart& chart,
                              const std::vector<Point>& points, const Tolerances& tol) {
  Sampler sampler(chart, columns);
  CheckResult r;
  r.name = name;
  r.kind = CheckKind::Residual;
  const auto rows = static_cast<Eigen::Index>(chart.dim());
  auto matrix = [&](const Point& p) {
    auto vals = sampler.at(p);
    Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(vals.size()));
    for (std::size_t c = 0; c < vals.size(); ++c)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, static_cast<Eigen::Index>(c)) = vals[c][static_cast<std::size_t>(i)];
    return m;
  };
  for (std::size_t k = 0; k < points.size(); ++k) {
    Eigen::MatrixXd a = matrix(points[k]);
    double worst = 0.0;
    for (std::size_t i = 0; i < chart.dim(); ++i) {
      if (!chart.coord(i).periodic) continue;
      Point q = points[k];
      q[i] += chart.coord(i).period;
      worst = std::max(worst, max_principal_angle(a, matrix(q)));
    }
    r.values.push_back(worst);
    if (worst > tol.period && !r.first_failure) r.first_failure = k;
  }
  summarize(r);
  r.pass = !r.first_failure;
  return r;
}

VerificationReport new_report(const std::string& kind, const Tolerances& tol, std::size_t n) {
  VerificationReport rep;
  rep.structure = kind;
  rep.tolerances = tol;
  rep.sample_count = n;
  return rep;
}

Components field_components(const VectorField& v) { return v.components(); }

ScalarExpr det3(const ScalarExpr m[3][3]) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace

const CheckResult& VerificationReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw PreconditionError("report has no check named '" + name + "'");
}

void VerificationReport::finalize(const std::vector<Point>& points) {
  pass = !checks.empty();
  first_failure.reset();
  for (const auto& c : checks) {
    if (c.pass) continue;
    pass = false;
    if (!first_failure) {
      std::size_t i = c.first_failure.value_or(0);
      first_failure = FailurePoint{c.name, i, i < points.size() ? points[i] : Point{}};
    }
  }
}

Distribution2::Distribution2(VectorField x_, VectorField y_) : x(std::move(x_)), y(std::move(y_)) {
  require_same_chart(x.chart(), y.chart());
}

VerificationReport check_contact_3d(const KForm& alpha, const SamplePlan& plan, const Tolerances& tol) {
  const Chart& chart = *alpha.chart();
  require_dim(chart, 3, "check_contact_3d");
  if (alpha.degree() != 1) throw PreconditionError("check_contact_3d needs a 1-form");
  auto points = sample_points(chart, plan);
  KForm da = exterior_derivative(alpha);
  KForm top = wedge(alpha, da);

  auto rep = new_report("contact", tol, points.size());
  rep.checks.push_back(magnitude_check("alpha^dalpha", CheckKind::NeverVanishing, form_components(top),
                                       {form_components(alpha), form_components(da)}, chart, points, tol));
  if (has_periodic(chart))
    rep.checks.push_back(span_period_check("period", {form_components(alpha)}, chart, points, tol));
  rep.finalize(points);
  return rep;
}

VerificationReport check_even_contact(const KForm& beta, const SamplePlan& plan, const Tolerances& tol) {
  const Chart& chart = *beta.chart();
  require_dim(chart, 4, "check_even_contact");
  if (beta.degree() != 1) throw PreconditionError("check_even_contact needs a 1-form");
  auto points = sample_points(chart, plan);
  KForm db = exterior_derivative(beta);
  KForm w = wedge(beta, db);

  auto rep = new_report("even_contact", tol, points.size());
  rep.checks.push_back(magnitude_check("beta^dbeta", CheckKind::NeverVanishing, form_components(w),
                                       {form_components(beta), form_components(db)}, chart, points, tol));
  if (has_periodic(chart))
    rep.checks.push_back(span_period_check("period", {form_components(beta)}, chart, points, tol));
  rep.finalize(points);
  return rep;
}

VerificationReport check_engel_pair(const EngelPair& pair, const SamplePlan& plan, const Tolerances& tol) {
  require_same_chart(pair.alpha.chart(), pair.beta.chart());
  const Chart& chart = *pair.alpha.chart();
  require_dim(chart, 4, "check_engel_pair");
  if (pair.alpha.degree() != 1 || pair.beta.degree() != 1) throw PreconditionError("an Engel pair consists of 1-forms");
  auto points = sample_points(chart, plan);
  const KForm& a = pair.alpha;
  const KForm& b = pair.beta;
  KForm da = exterior_derivative(a);
  KForm db = exterior_derivative(b);
  KForm ab = wedge(a, b);

  auto rep = new_report("engel_pair", tol, points.size());
  auto fa = form_components(a), fb = form_components(b);
  rep.checks.push_back(magnitude_check("alpha^beta^dalpha", CheckKind::NeverVanishing, wedge(ab, da).dense(),
                                       {fa, fb, da.dense()}, chart, points, tol));
  rep.checks.push_back(magnitude_check("alpha^beta^dbeta", CheckKind::IdenticallyZero, wedge(ab, db).dense(),
                                       {fa, fb, db.dense()}, chart, points, tol));
  rep.checks.push_back(magnitude_check("beta^dbeta", CheckKind::NeverVanishing, wedge(b, db).dense(),
                                       {fb, db.dense()}, chart, points, tol));
  if (has_periodic(chart)) {
    rep.checks.push_back(span_period_check("period alpha", {fa}, chart, points, tol));
    rep.checks.push_back(span_period_check("period beta", {fb}, chart, points, tol));
  }
  rep.finalize(points);
  return rep;
}

EngelPairOrientation orient_engel_pair(const EngelPair& pair, const SamplePlan& plan, const Tolerances& tol) {
  EngelPairOrientation o{check_engel_pair(pair, plan, tol), check_engel_pair({pair.beta, pair.alpha}, plan, tol), {}};
  if (o.as_given.pass && o.swapped.pass)
    o.satisfied_by = "both";
  else if (o.as_given.pass)
    o.satisfied_by = "as_given";
  else if (o.swapped.pass)
    o.satisfied_by = "swapped";
  else
    o.satisfied_by = "neither";
  return o;
}

VerificationReport check_engel_frame(const Distribution2& d, const SamplePlan& plan, const Tolerances& tol) {
  const Chart& chart = *d.chart();
  require_dim(chart, 4, "check_engel_frame");
  auto points = sample_points(chart, plan);
  VectorField xy = lie_bracket(d.x, d.y);
  VectorField xxy = lie_bracket(d.x, xy);
  VectorField yxy = lie_bracket(d.y, xy);
  auto cx = field_components(d.x), cy = field_components(d.y), c1 = field_components(xy);

  auto rep = new_report("engel_frame", tol, points.size());
  rep.checks.push_back(rank_check("rank D", {cx, cy}, 2, chart, points, tol));
  rep.checks.push_back(rank_check("rank D2", {cx, cy, c1}, 3, chart, points, tol));
  rep.checks.push_back(rank_check("rank D3", {cx, cy, c1, field_components(xxy), field_components(yxy)}, 4, chart,
                                  points, tol));
  if (has_periodic(chart)) rep.checks.push_back(span_period_check("period", {cx, cy}, chart, points, tol));
  rep.finalize(points);
  return rep;
}

std::array<VectorField, 3> derived_square(const Distribution2& d, const SamplePlan& plan, const Tolerances& tol) {
  const Chart& chart = *d.chart();
  VectorField xy = lie_bracket(d.x, d.y);
  auto points = sample_points(chart, plan);
  auto r = rank_check("rank D2", {d.x.components(), d.y.components(), xy.components()}, 3, chart, points, tol);
  if (!r.pass) {
    std::size_t i = r.first_failure.value_or(0);
    throw VerificationError("D + [D, D] has rank " + std::to_string(r.ranks.empty() ? 0 : r.ranks[i]) +
                            " at " + (points.empty() ? std::string("(no samples)") : point_string(points[i])));
  }
  return {d.x, d.y, xy};
}

KForm annihilator_1form(const std::array<VectorField, 3>& frame, const SamplePlan& plan, const Tolerances& tol) {
  require_same_chart(frame[0].chart(), frame[1].chart());
  require_same_chart(frame[0].chart(), frame[2].chart());
  const ChartPtr& chart = frame[0].chart();
  require_dim(*chart, 4, "annihilator_1form");
  auto points = sample_points(*chart, plan);
  auto r = rank_check("rank", {frame[0].components(), frame[1].components(), frame[2].components()}, 3, *chart,
                      points, tol);
  if (!r.pass) {
    std::size_t i = r.first_failure.value_or(0);
    throw VerificationError("frame is rank deficient at " +
                            (points.empty() ? std::string("(no samples)") : point_string(points[i])));
  }

  std::vector<ScalarExpr> coeffs;
  for (std::size_t omit = 0; omit < 4; ++omit) {
    ScalarExpr m[3][3];
    std::size_t row = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      if (i == omit) continue;
      for (std::size_t c = 0; c < 3; ++c) m[row][c] = frame[c][i];
      ++row;
    }
    ScalarExpr minor = simplify(det3(m));
    coeffs.push_back(omit % 2 == 0 ? minor : simplify(-minor));
  }
  KForm beta = KForm::one_form(chart, coeffs);

  std::vector<Components> groups{coeffs};
  for (const auto& f : frame) groups.push_back(f.components());
  Sampler sampler(*chart, groups);
  for (const Point& p : points) {
    auto v = sampler.at(p);
    for (std::size_t f = 1; f <= 3; ++f) {
      double dot = 0.0;
      for (std::size_t i = 0; i < 4; ++i) dot += v[0][i] * v[f][i];
      double bound = 1e-10 * std::max(1.0, norm(v[0]) * norm(v[f]));
      if (std::abs(dot) > bound)
        throw VerificationError("annihilator does not vanish on frame field " + std::to_string(f - 1) + " at " +
                                point_string(p));
    }
  }
  return beta;
}

VectorField characteristic_vector_field(const KForm& beta, const KForm& volume, const SamplePlan& plan,
                                        const Tolerances& tol) {
  require_same_chart(beta.chart(), volume.chart());
  const ChartPtr& chart = beta.chart();
  require_dim(*chart, 4, "characteristic_vector_field");
  if (beta.degree() != 1 || volume.degree() != 4)
    throw PreconditionError("characteristic_vector_field needs a 1-form and a volume form");
  auto points = sample_points(*chart, plan);
  ScalarExpr rho = volume.coefficient(IndexSet{0b1111});
  auto rc = magnitude_check("volume", CheckKind::NeverVanishing, {rho}, {}, *chart, points, tol);
  if (!rc.pass) {
    std::size_t i = rc.first_failure.value_or(0);
    throw VerificationError("volume form vanishes at " +
                            (points.empty() ? std::string("(no samples)") : point_string(points[i])));
  }

  KForm c = wedge(beta, exterior_derivative(beta)).simplified();
  std::vector<ScalarExpr> comps;
  for (std::size_t i = 0; i < 4; ++i) {
    ScalarExpr ci = c.coefficient(IndexSet{0b1111u & ~(1u << i)});
    ScalarExpr xi = ci / rho;
    comps.push_back(simplify(i % 2 == 0 ? xi : -xi));
  }
  VectorField x0(chart, comps);

  KForm defect = interior_product(x0, volume) - c;
  Sampler sampler(*chart, {defect.dense(), c.dense()});
  for (const Point& p : points) {
    auto v = sampler.at(p);
    if (norm(v[0]) > 1e-10 * std::max(1.0, norm(v[1])))
      throw VerificationError("X0 _| volume differs from beta^dbeta at " + point_string(p));
  }
  return x0;
}

VerificationReport check_characteristic(const VectorField& x0, const KForm& beta, const SamplePlan& plan,
                                        const Tolerances& tol) {
  require_same_chart(x0.chart(), beta.chart());
  const Chart& chart = *beta.chart();
  auto points = sample_points(chart, plan);
  KForm l = lie_derivative_form(x0, beta);
  auto rep = new_report("characteristic", tol, points.size());
  // with beta(X0) = 0, |L_X0 beta| <= |X0| |dbeta|; L itself may be pure rounding
  rep.checks.push_back(magnitude_check("(L_X0 beta)^beta", CheckKind::IdenticallyZero, wedge(l, beta).dense(),
                                       {x0.components(), exterior_derivative(beta).dense(), beta.dense()}, chart,
                                       points, tol));
  rep.checks.push_back(magnitude_check("beta(X0)", CheckKind::IdenticallyZero, {pairing(beta, x0)},
                                       {beta.dense(), x0.components()}, chart, points, tol));
  rep.finalize(points);
  return rep;
}

VerificationReport check_twisting_condition(const VectorField& x0, const VectorField& v, const SamplePlan& plan,
                                            const Tolerances& tol) {
  require_same_chart(x0.chart(), v.chart());
  const Chart& chart = *x0.chart();
  auto points = sample_points(chart, plan);
  VectorField b = lie_bracket(x0, v);
  auto rep = new_report("twisting_condition", tol, points.size());
  rep.checks.push_back(rank_check("rank [X0, V, [X0,V]]", {x0.components(), v.components(), b.components()}, 3,
                                  chart, points, tol));
  rep.finalize(points);
  return rep;
}

CheckResult check_rank(const std::string& name, const std::vector<VectorField>& fields, int expected,
                       const std::vector<Point>& points, const Tolerances& tol) {
  if (fields.empty()) throw PreconditionError("rank check needs at least one field");
  std::vector<Components> cols;
  for (const auto& f : fields) {
    require_same_chart(fields.front().chart(), f.chart());
    cols.push_back(f.components());
  }
  return rank_check(name, cols, expected, *fields.front().chart(), points, tol);
}

double plane_period_defect(const Distribution2& d, const std::vector<Point>& points) {
  Tolerances tol;
  auto r = span_period_check("period", {d.x.components(), d.y.components()}, *d.chart(), points, tol);
  return r.values.empty() ? 0.0 : r.max;
}

}  // namespace engel

#include "engel/extension.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>

#include "engel/error.hpp"
#include "engel/linalg.hpp"

namespace engel {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMatchTol = 1e-9;

double reduce_half_turn(double x) { return x - kPi * std::round(x / kPi); }

double line_angle(double a, double b) {
  double s = std::fmod(std::atan2(b, a), kPi);
  if (s < 0.0) s += kPi;
  if (s >= kPi) s -= kPi;
  return s;
}

std::string point_string(const Point& p) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ')';
  return os.str();
}

std::vector<double> eval_all(const ScalarExpr& e, const Chart& chart, const std::vector<Point>& points) {
  std::vector<ScalarExpr> one{e};
  CompiledExprs c(one, chart.names());
  std::vector<double> out;
  out.reserve(points.size());
  for (const Point& p : points) out.push_back(c.evaluate(p)[0]);
  return out;
}

// g = u + k pi when (a, b) = (cos u, sin u) literally.
std::optional<ScalarExpr> angle_from_pattern(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.op() == Op::Cos && b.op() == Op::Sin && a.lhs() == b.lhs()) return a.lhs();
  return std::nullopt;
}

ScalarExpr pi_multiple(long k) {
  return ScalarExpr::constant(static_cast<double>(k)) * ScalarExpr::named_constant("pi");
}

}  // namespace

AngleFunction legendrian_angle_function(const ContactFrame& frame, const ScalarExpr& a, const ScalarExpr& b,
                                        const SamplePlan& plan, const Tolerances& tol,
                                        const std::optional<ScalarExpr>& user_g) {
  const Chart& chart = *frame.chart();
  for (const ScalarExpr& e : {a, b})
    for (const auto& v : e.free_variables())
      if (!chart.index_of(v)) throw PreconditionError("foliation coefficient uses unknown coordinate '" + v + "'");

  SamplePlan grid_plan = plan;
  grid_plan.random = 0;
  AngleFunction out;
  out.points = sample_points(chart, grid_plan);
  const std::size_t n = out.points.size();
  auto av = eval_all(a, chart, out.points);
  auto bv = eval_all(b, chart, out.points);
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (av[i] * av[i] + bv[i] * bv[i] < tol.nonzero)
      throw PreconditionError("foliation coefficients vanish at " + point_string(out.points[i]));
    raw[i] = line_angle(av[i], bv[i]);
  }

  // Unwrap over the grid graph; neighbours differ by one index along one axis.
  std::vector<std::size_t> res(chart.dim()), stride(chart.dim());
  for (std::size_t i = 0; i < chart.dim(); ++i) res[i] = static_cast<std::size_t>(grid_plan.resolution(i));
  std::size_t acc = 1;
  for (std::size_t i = chart.dim(); i-- > 0;) {
    stride[i] = acc;
    acc *= res[i];
  }
  auto for_neighbours = [&](std::size_t k, auto&& fn) {
    for (std::size_t ax = 0; ax < chart.dim(); ++ax) {
      std::size_t idx = (k / stride[ax]) % res[ax];
      if (idx + 1 < res[ax]) fn(k + stride[ax]);
      if (idx > 0) fn(k - stride[ax]);
    }
  };
  auto step = [&](std::size_t p, std::size_t q) {
    double d = reduce_half_turn(raw[q] - raw[p]);
    if (std::abs(d) >= kPi / 2 - 1e-12)
      throw PreconditionError("foliation turns by a quarter turn or more between " + point_string(out.points[p]) +
                              " and " + point_string(out.points[q]) + "; sample more finely");
    return d;
  };
  std::vector<double> u(n, 0.0);
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue{0};
  u[0] = raw[0];
  seen[0] = true;
  while (!queue.empty()) {
    std::size_t p = queue.front();
    queue.pop_front();
    for_neighbours(p, [&](std::size_t q) {
      if (seen[q]) return;
      u[q] = u[p] + step(p, q);
      seen[q] = true;
      queue.push_back(q);
    });
  }
  for (std::size_t p = 0; p < n; ++p)
    for_neighbours(p, [&](std::size_t q) {
      if (std::abs(u[q] - u[p] - step(p, q)) > kMatchTol)
        throw PreconditionError("foliation angle has no continuous lift across the grid near " +
                                point_string(out.points[p]));
    });

  double m = *std::min_element(u.begin(), u.end());
  double shift = kPi * std::floor((kPi - m) / kPi);
  for (double& x : u) x += shift;
  out.values = u;
  out.min = *std::min_element(u.begin(), u.end());
  out.max = *std::max_element(u.begin(), u.end());
  if (std::abs(out.min - kPi) <= kMatchTol) out.warnings.push_back("min g = pi: the normalization is at its boundary");

  if (user_g) {
    auto all = sample_points(chart, plan);
    auto gv = eval_all(*user_g, chart, all);
    auto aa = eval_all(a, chart, all);
    auto bb = eval_all(b, chart, all);
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (std::abs(reduce_half_turn(gv[i] - line_angle(aa[i], bb[i]))) > kMatchTol)
        throw PreconditionError("supplied g does not generate the foliation at " + point_string(all[i]));
      lo = std::min(lo, gv[i]);
    }
    if (!(lo > 0.0) || lo > kPi + kMatchTol) {
      std::ostringstream os;
      os << "supplied g violates 0 < min g <= pi (min " << lo << ")";
      throw PreconditionError(os.str());
    }
    out.symbolic = *user_g;
    return out;
  }

  ScalarExpr sa = simplify(a), sb = simplify(b);
  if (sa.is_constant() && sb.is_constant()) {
    out.symbolic = ScalarExpr::constant(out.values.front());
  } else if (auto base = angle_from_pattern(sa, sb)) {
    auto bv2 = eval_all(*base, chart, out.points);
    long k = std::lround((out.values.front() - bv2.front()) / kPi);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      ok = std::abs(bv2[i] + static_cast<double>(k) * kPi - out.values[i]) <= kMatchTol;
    if (ok)
      out.symbolic = k == 0 ? *base : *base + pi_multiple(k);
    else
      out.warnings.push_back("cos/sin pattern does not match the unwrapped angle table");
  }
  return out;
}

Coordinate unit_interval() { return Coordinate::interval("t", 0.0, 1.0); }

Extension extend(const ExtensionSpec& spec, const SamplePlan& plan, const Tolerances& tol) {
  if (spec.n < 0) throw PreconditionError("twist must be non-negative, got " + std::to_string(spec.n));
  AngleFunction angle = legendrian_angle_function(spec.frame, spec.a, spec.b, plan, tol, spec.g);
  if (!angle.symbolic)
    throw PreconditionError("no closed form for the angle function; supply g explicitly");
  ScalarExpr g = *angle.symbolic;
  ChartPtr product = product_chart(spec.frame.chart(), unit_interval());
  ScalarExpr big_g = g + pi_multiple(spec.n);
  ScalarExpr h = ScalarExpr::variable("t") * big_g;
  VectorField vn = cos(h) * lift(spec.frame.v0(), product) + sin(h) * lift(spec.frame.v1(), product);
  Extension ext{spec, g, angle, Distribution2(VectorField::coordinate(product, "t"), vn), angle.warnings};
  auto rep = check_engel_frame(ext.frame, plan, tol);
  if (!rep.pass) {
    std::ostringstream os;
    os << "extension is not Engel";
    if (rep.first_failure) os << " (" << rep.first_failure->check << " at " << point_string(rep.first_failure->point) << ")";
    throw VerificationError(os.str());
  }
  return ext;
}

VerificationReport verify_extension_identities(const Extension& ext, const SamplePlan& plan, const Tolerances& tol) {
  const ChartPtr& product = ext.frame.chart();
  const ContactFrame& f = ext.spec.frame;
  ScalarExpr big_g = ext.g + pi_multiple(ext.spec.n);
  ScalarExpr h = ScalarExpr::variable("t") * big_g;
  VectorField v0 = lift(f.v0(), product), v1 = lift(f.v1(), product);
  const VectorField& dt = ext.frame.x;
  const VectorField& vn = ext.frame.y;
  VectorField un = big_g * ((-sin(h)) * v0 + cos(h) * v1);

  VectorField first = lie_bracket(dt, vn) - un;
  VectorField second = lie_bracket(vn, un) - big_g * lift(lie_bracket(f.v0(), f.v1()), product);

  auto points = sample_points(*product, plan);
  std::vector<ScalarExpr> exprs = first.components();
  for (const auto* v : {&second, &v0, &v1}) exprs.insert(exprs.end(), v->components().begin(), v->components().end());
  CompiledExprs compiled(exprs, product->names());

  CheckResult c1, c2, c3;
  c1.name = "[dt, V^n] - U^n";
  c2.name = "[V^n, U^n] - G[V0,V1] mod span(V0,V1)";
  c3.name = "[V^n, U^n] - G[V0,V1]";
  for (auto* c : {&c1, &c2, &c3}) c->kind = CheckKind::Residual;
  const auto dim = static_cast<Eigen::Index>(product->dim());
  for (const Point& p : points) {
    auto v = compiled.evaluate(p);
    Eigen::VectorXd r1(dim), r2(dim);
    Eigen::MatrixXd span(dim, 2);
    for (Eigen::Index i = 0; i < dim; ++i) {
      r1(i) = v[static_cast<std::size_t>(i)];
      r2(i) = v[static_cast<std::size_t>(dim + i)];
      span(i, 0) = v[static_cast<std::size_t>(2 * dim + i)];
      span(i, 1) = v[static_cast<std::size_t>(3 * dim + i)];
    }
    c1.values.push_back(r1.norm());
    c2.values.push_back(least_squares(span, r2).residual);
    c3.values.push_back(r2.norm());
  }
  for (auto* c : {&c1, &c2, &c3}) {
    if (!c->values.empty()) {
      c->min = *std::min_element(c->values.begin(), c->values.end());
      c->max = *std::max_element(c->values.begin(), c->values.end());
    }
    c->scale = 1.0;
    for (std::size_t i = 0; i < c->values.size(); ++i)
      if (c->values[i] > kMatchTol) {
        c->first_failure = i;
        break;
      }
    c->pass = !c->first_failure && !points.empty();
  }

  VerificationReport rep;
  rep.structure = "extension_identities";
  rep.tolerances = tol;
  rep.sample_count = points.size();
  rep.checks.push_back(std::move(c1));
  rep.checks.push_back(std::move(c2));
  if (ext.g.free_variables().empty()) {
    rep.checks.push_back(std::move(c3));
  } else {
    std::ostringstream os;
    os << "g is not constant; the literal second identity has residual up to " << c3.max
       << " (terms in span(V0, V1) from derivatives of g)";
    rep.warnings.push_back(os.str());
  }
  rep.finalize(points);
  return rep;
}

std::vector<FamilySlice> extend_family(const std::vector<ExtensionSpec>& specs, const std::vector<double>& s_grid,
                                       const SamplePlan& plan, const Tolerances& tol) {
  if (specs.size() != s_grid.size()) throw PreconditionError("one extension spec per grid value is required");
  if (specs.empty()) throw PreconditionError("empty family");
  for (std::size_t i = 1; i < specs.size(); ++i) {
    if (!(s_grid[i] > s_grid[i - 1])) throw PreconditionError("family grid must be increasing");
    if (std::abs(specs[i].n - specs[i - 1].n) >= 2) {
      std::ostringstream os;
      os << "twist jumps from " << specs[i - 1].n << " to " << specs[i].n << " between s = " << s_grid[i - 1]
         << " and s = " << s_grid[i];
      throw PreconditionError(os.str());
    }
  }
  std::vector<FamilySlice> out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Extension ext = extend(specs[i], plan, tol);
    MinimalTwisting m = minimal_twisting_number(ext.frame, specs[i].frame, plan, tol, "t");
    out.push_back({s_grid[i], std::move(ext), std::move(m)});
  }
  return out;
}

}  // namespace engel

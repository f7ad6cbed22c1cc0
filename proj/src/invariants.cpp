#include "engel/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <numbers>
#include <sstream>

#include "engel/error.hpp"
#include "engel/linalg.hpp"

namespace engel {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kIntegerTol = 1e-6;

std::string point_string(const Point& p) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ')';
  return os.str();
}

ScalarExpr dot(const VectorField& u, const VectorField& v) {
  ScalarExpr s = ScalarExpr::constant(0);
  for (std::size_t i = 0; i < u.dim(); ++i) s = s + u[i] * v[i];
  return s;
}

}  // namespace

VerificationReport LegendrianLineField::validate(const SamplePlan& plan, const Tolerances& tol) const {
  const Chart& chart = *frame.chart();
  auto points = sample_points(chart, plan);
  std::vector<ScalarExpr> ab{a, b};
  CompiledExprs c(ab, chart.names());
  CheckResult r;
  r.name = "a^2 + b^2";
  r.kind = CheckKind::NeverVanishing;
  r.scale = tol.nonzero;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto v = c.evaluate(points[i]);
    double n2 = v[0] * v[0] + v[1] * v[1];
    r.values.push_back(n2);
    if (n2 < tol.nonzero && !r.first_failure) r.first_failure = i;
  }
  if (!r.values.empty()) {
    r.min = *std::min_element(r.values.begin(), r.values.end());
    r.max = *std::max_element(r.values.begin(), r.values.end());
    r.relative_min = r.max > 0 ? r.min / r.max : 0.0;
  }
  r.pass = !r.first_failure && !points.empty();
  VerificationReport rep;
  rep.structure = "legendrian_line";
  rep.tolerances = tol;
  rep.sample_count = points.size();
  rep.checks.push_back(std::move(r));
  rep.finalize(points);
  return rep;
}

TwistingNumber twisting_number(const Distribution2& d, const ContactFrame& frame,
                               const std::vector<Point>& base_points, const SamplePlan& plan,
                               const Tolerances& tol, const std::string& fiber) {
  if (base_points.empty()) throw PreconditionError("twisting number needs at least one base point");
  Development dev(d, frame, fiber, plan, tol);
  const auto& coord = d.chart()->coord(dev.fiber_index());
  if (!coord.periodic) throw PreconditionError("twisting number needs a periodic fiber coordinate");

  TwistingNumber out;
  out.base_points = base_points;
  std::optional<long> common;
  for (const Point& p : base_points) {
    auto tr = dev.trace(p, coord.lo, coord.lo + coord.period, 256);
    double total = (tr.angle.back() - tr.angle.front()) / kPi;
    out.totals.push_back(total);
    long k = std::lround(total);
    if (std::abs(total - static_cast<double>(k)) > kIntegerTol) {
      std::ostringstream os;
      os << "fiber at " << point_string(p) << " turns by " << total << " half-turns, not an integer";
      throw VerificationError(os.str());
    }
    if (common && *common != k) {
      std::ostringstream os;
      os << "twisting disagrees between base points: " << *common << " vs " << k << " at " << point_string(p);
      throw VerificationError(os.str());
    }
    common = k;
  }
  out.signed_value = static_cast<int>(*common);
  out.abs_value = std::abs(out.signed_value);
  return out;
}

MinimalTwisting minimal_twisting_number(const Distribution2& d, const ContactFrame& frame, const SamplePlan& plan,
                                        const Tolerances& tol, const std::string& fiber) {
  Development dev(d, frame, fiber, plan, tol);
  const auto& coord = d.chart()->coord(dev.fiber_index());
  if (coord.periodic) throw PreconditionError("minimal twisting number needs an interval fiber");

  MinimalTwisting out;
  out.base_points = sample_points(*frame.chart(), plan);
  if (out.base_points.empty()) throw PreconditionError("no base samples");
  out.min_angle = std::numeric_limits<double>::infinity();
  for (const Point& p : out.base_points) {
    auto tr = dev.trace(p, coord.lo, coord.hi, 256);
    double phi = tr.angle.back() - tr.angle.front();
    if (phi < -kIntegerTol) {
      std::ostringstream os;
      os << "development angle decreases across the fiber at " << point_string(p) << " (" << phi << ")";
      throw VerificationError(os.str());
    }
    out.angles.push_back(phi);
    out.min_angle = std::min(out.min_angle, phi);
  }
  double q = out.min_angle / kPi;
  long k = std::lround(q);
  if (std::abs(out.min_angle - static_cast<double>(k) * kPi) <= kIntegerTol) {
    out.value = static_cast<int>(k);
    std::ostringstream os;
    os << "minimal angle " << out.min_angle << " is within " << kIntegerTol << " of " << k
       << " pi; the half-open and closed normalizations disagree here";
    out.warnings.push_back(os.str());
  } else {
    out.value = static_cast<int>(std::floor(q));
  }
  return out;
}

LegendrianLineField induced_legendrian_line(const Distribution2& d, const ContactFrame& frame, double t,
                                            const SamplePlan& plan, const Tolerances& tol,
                                            const std::string& fiber) {
  const ChartPtr& product = d.chart();
  product->require_index(fiber);
  if (!(product->without(fiber) == *frame.chart()))
    throw ChartMismatch("contact frame chart is not the base of the product chart");
  fiber_characteristic_form(d, fiber, plan, tol);

  VectorField w = fiber_free_generator(d, fiber).substitute({{fiber, ScalarExpr::constant(t)}});
  std::vector<ScalarExpr> base_comps;
  for (std::size_t i = 0; i < product->dim(); ++i)
    if (product->names()[i] != fiber) base_comps.push_back(w[i]);
  VectorField wb(frame.chart(), base_comps);

  // Gram system for the projection onto (V0, V1)
  const VectorField& v0 = frame.v0();
  const VectorField& v1 = frame.v1();
  ScalarExpr g00 = dot(v0, v0), g01 = dot(v0, v1), g11 = dot(v1, v1);
  ScalarExpr w0 = dot(wb, v0), w1 = dot(wb, v1);
  ScalarExpr det = g00 * g11 - g01 * g01;
  ScalarExpr a = simplify((g11 * w0 - g01 * w1) / det);
  ScalarExpr b = simplify((g00 * w1 - g01 * w0) / det);

  const Chart& base = *frame.chart();
  std::vector<ScalarExpr> exprs{a, b};
  exprs.insert(exprs.end(), base_comps.begin(), base_comps.end());
  for (const auto& c : v0.components()) exprs.push_back(c);
  for (const auto& c : v1.components()) exprs.push_back(c);
  CompiledExprs compiled(exprs, base.names());
  for (const Point& p : sample_points(base, plan)) {
    auto v = compiled.evaluate(p);
    double res = 0.0, wn = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      double r = v[2 + i] - v[0] * v[5 + i] - v[1] * v[8 + i];
      res += r * r;
      wn += v[2 + i] * v[2 + i];
    }
    if (std::sqrt(res) > tol.proj * std::max(1.0, std::sqrt(wn))) {
      std::ostringstream os;
      os << "slice generator leaves the contact plane at " << point_string(p) << " (residual " << std::sqrt(res)
         << ")";
      throw VerificationError(os.str());
    }
  }
  return {frame, a, b};
}

double line_angle_distance(const LegendrianLineField& l1, const LegendrianLineField& l2, const SamplePlan& plan) {
  if (!(*l1.frame.chart() == *l2.frame.chart())) throw ChartMismatch("line fields live on different charts");
  const Chart& chart = *l1.frame.chart();
  std::vector<ScalarExpr> exprs{l1.a, l1.b, l2.a, l2.b};
  CompiledExprs c(exprs, chart.names());
  double worst = 0.0;
  for (const Point& p : sample_points(chart, plan)) {
    auto v = c.evaluate(p);
    worst = std::max(worst, projective_angle(v[0], v[1], v[2], v[3]));
  }
  return worst;
}

}  // namespace engel

#include "engel/prolongation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "engel/error.hpp"
#include "engel/linalg.hpp"

namespace engel {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxRefine = 24;

std::string describe_failure(const VerificationReport& rep) {
  std::ostringstream os;
  os << rep.structure << " check failed";
  if (rep.first_failure) {
    os << " (" << rep.first_failure->check << " at (";
    const auto& p = rep.first_failure->point;
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << "))";
  }
  return os.str();
}

// x reduced into [-pi/2, pi/2]
double reduce_half_turn(double x) { return x - kPi * std::round(x / kPi); }

double line_angle(double a, double b) {
  double s = std::atan2(b, a);
  s = std::fmod(s, kPi);
  if (s < 0.0) s += kPi;
  if (s >= kPi) s -= kPi;
  return s;
}

ChartPtr base_of(const Chart& product, const std::string& fiber) {
  return make_chart(product.without(fiber).coords());
}

}  // namespace

ContactFrame::ContactFrame(VectorField v0, VectorField v1) : v0_(std::move(v0)), v1_(std::move(v1)) {
  if (v0_.chart() != v1_.chart() && !(*v0_.chart() == *v1_.chart()))
    throw ChartMismatch("contact frame fields live on different charts");
  if (v0_.chart()->dim() != 3) throw PreconditionError("a contact frame lives on a 3-dimensional chart");
}

VerificationReport ContactFrame::validate(const SamplePlan& plan, const Tolerances& tol) const {
  const Chart& c = *chart();
  auto points = sample_points(c, plan);
  VerificationReport rep;
  rep.structure = "contact_frame";
  rep.tolerances = tol;
  rep.sample_count = points.size();
  rep.checks.push_back(check_rank("rank (V0, V1)", {v0_, v1_}, 2, points, tol));
  rep.checks.push_back(check_rank("rank (V0, V1, [V0,V1])", {v0_, v1_, lie_bracket(v0_, v1_)}, 3, points, tol));
  rep.finalize(points);
  return rep;
}

ChartPtr product_chart(const ChartPtr& base, const Coordinate& fiber) {
  return make_chart(base->with(fiber).coords());
}

Coordinate theta_circle() { return Coordinate::circle("theta", 2 * kPi); }

VectorField lift(const VectorField& v, const ChartPtr& product) {
  std::vector<ScalarExpr> comps(product->dim());
  const Chart& base = *v.chart();
  for (std::size_t i = 0; i < base.dim(); ++i) comps[product->require_index(base.names()[i])] = v[i];
  return VectorField(product, comps);
}

ProlongedEngel prolong(const ContactFrame& frame, int n, const SamplePlan& plan, const Tolerances& tol) {
  if (n < 1) throw PreconditionError("covering index must be at least 1, got " + std::to_string(n));
  auto rep = frame.validate(plan, tol);
  if (!rep.pass) throw PreconditionError("frame is not contact: " + describe_failure(rep));
  ChartPtr product = product_chart(frame.chart(), theta_circle());
  ScalarExpr half = ScalarExpr::constant(n) * ScalarExpr::variable("theta") / ScalarExpr::constant(2);
  VectorField y = cos(half) * lift(frame.v0(), product) + sin(half) * lift(frame.v1(), product);
  return {frame, n, Distribution2(VectorField::coordinate(product, "theta"), y)};
}

KForm fiber_characteristic_form(const Distribution2& d, const std::string& fiber, const SamplePlan& plan,
                                const Tolerances& tol) {
  d.chart()->require_index(fiber);
  KForm beta = annihilator_1form(derived_square(d, plan, tol), plan, tol);
  auto rep = check_characteristic(VectorField::coordinate(d.chart(), fiber), beta, plan, tol);
  if (!rep.pass)
    throw PreconditionError("d/d" + fiber + " does not span the characteristic line field: " +
                            describe_failure(rep));
  return beta;
}

KForm deprolong(const Distribution2& d, const std::string& fiber, double section, const SamplePlan& plan,
                const Tolerances& tol) {
  KForm beta = fiber_characteristic_form(d, fiber, plan, tol);
  ChartPtr base = base_of(*d.chart(), fiber);
  std::map<std::string, ScalarExpr> at{{fiber, ScalarExpr::constant(section)}};
  std::vector<ScalarExpr> coeffs;
  for (const auto& name : base->names()) coeffs.push_back(simplify(beta.coefficient({name}).substitute(at)));
  KForm alpha = KForm::one_form(base, coeffs);
  auto rep = check_contact_3d(alpha, plan, tol);
  if (!rep.pass) throw VerificationError("deprolonged form is not contact: " + describe_failure(rep));
  return alpha;
}

double max_kernel_angle(const KForm& alpha, const ContactFrame& frame, const std::vector<Point>& points) {
  const Chart& chart = *frame.chart();
  if (alpha.degree() != 1 || alpha.chart()->dim() != chart.dim())
    throw PreconditionError("max_kernel_angle needs a 1-form on the frame's chart");
  std::vector<ScalarExpr> exprs = alpha.dense();
  for (const auto& c : frame.v0().components()) exprs.push_back(c);
  for (const auto& c : frame.v1().components()) exprs.push_back(c);
  CompiledExprs compiled(exprs, chart.names());
  double worst = 0.0;
  for (const Point& p : points) {
    auto v = compiled.evaluate(p);
    Eigen::RowVectorXd normal(3);
    Eigen::MatrixXd plane(3, 2);
    for (int i = 0; i < 3; ++i) {
      normal(i) = v[i];
      plane(i, 0) = v[3 + i];
      plane(i, 1) = v[6 + i];
    }
    worst = std::max(worst, max_principal_angle(kernel_basis(normal), plane));
  }
  return worst;
}

VectorField fiber_free_generator(const Distribution2& d, const std::string& fiber) {
  std::size_t k = d.chart()->require_index(fiber);
  if (d.y[k].is_zero()) return d.y;
  if (d.x[k].is_zero()) return d.x;
  // Y_f X - X_f Y kills the fiber component
  return (d.y[k] * d.x - d.x[k] * d.y).simplified();
}

LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 2) throw PreconditionError("line fit needs at least two samples");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(t.size()), 2);
  Eigen::VectorXd b(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    a(static_cast<Eigen::Index>(i), 0) = t[i];
    a(static_cast<Eigen::Index>(i), 1) = 1.0;
    b(static_cast<Eigen::Index>(i)) = y[i];
  }
  auto ls = least_squares(a, b);
  double dev = (a * ls.x - b).cwiseAbs().maxCoeff();
  return {ls.x(0), ls.x(1), dev};
}

Development::Development(const Distribution2& d, const ContactFrame& frame, std::string fiber,
                         const SamplePlan& plan, const Tolerances& tol)
    : chart_(d.chart()), fiber_(std::move(fiber)), fiber_index_(d.chart()->require_index(fiber_)), tol_(tol),
      generator_(fiber_free_generator(d, fiber_)) {
  if (!(chart_->without(fiber_) == *frame.chart()))
    throw ChartMismatch("contact frame chart is not the base of the product chart");
  fiber_characteristic_form(d, fiber_, plan, tol);
  std::vector<ScalarExpr> exprs = generator_.components();
  for (const auto& v : {lift(frame.v0(), chart_), lift(frame.v1(), chart_)})
    exprs.insert(exprs.end(), v.components().begin(), v.components().end());
  compiled_ = CompiledExprs(exprs, chart_->names());
}

double Development::fiber_start() const { return chart_->coord(fiber_index_).lo; }

double Development::fiber_length() const {
  const auto& c = chart_->coord(fiber_index_);
  return c.periodic ? c.period : c.hi - c.lo;
}

Point Development::full_point(const Point& base_point, double t) const {
  if (base_point.size() + 1 != chart_->dim()) throw PreconditionError("base point has the wrong dimension");
  Point p;
  p.reserve(chart_->dim());
  for (std::size_t i = 0, j = 0; i < chart_->dim(); ++i) p.push_back(i == fiber_index_ ? t : base_point[j++]);
  return p;
}

std::pair<double, double> Development::coefficients(const Point& base_point, double t) const {
  Point p = full_point(base_point, t);
  auto v = compiled_.evaluate(p);
  const std::size_t n = chart_->dim();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n - 1), 2);
  Eigen::VectorXd w(static_cast<Eigen::Index>(n - 1));
  for (std::size_t i = 0, r = 0; i < n; ++i) {
    if (i == fiber_index_) continue;
    w(static_cast<Eigen::Index>(r)) = v[i];
    a(static_cast<Eigen::Index>(r), 0) = v[n + i];
    a(static_cast<Eigen::Index>(r), 1) = v[2 * n + i];
    ++r;
  }
  auto ls = least_squares(a, w);
  if (ls.residual > tol_.proj * std::max(1.0, w.norm())) {
    std::ostringstream os;
    os << "projected generator leaves the contact plane (residual " << ls.residual << ") at " << fiber_ << " = "
       << t;
    throw VerificationError(os.str());
  }
  if (ls.x.squaredNorm() < tol_.nonzero) {
    std::ostringstream os;
    os << "projected generator vanishes at " << fiber_ << " = " << t;
    throw VerificationError(os.str());
  }
  return {ls.x(0), ls.x(1)};
}

double Development::raw_angle(const Point& base_point, double t) const {
  auto [a, b] = coefficients(base_point, t);
  return line_angle(a, b);
}

FiberTrace Development::trace(const Point& base_point, double t0, double t1, int steps) const {
  if (steps < 1) throw PreconditionError("fiber trace needs at least one step");
  FiberTrace out;
  double r = raw_angle(base_point, t0);
  double s = r;
  out.t.push_back(t0);
  out.angle.push_back(s);

  // Unwrapped change of angle over [ta, tb]; halves the step until the raw
  // change is below pi/4.
  auto advance = [&](auto&& self, double ta, double ra, double tb, double rb, int depth) -> double {
    double delta = reduce_half_turn(rb - ra);
    if (std::abs(delta) < kPi / 4) return delta;
    if (depth >= kMaxRefine)
      throw VerificationError("development angle turns too fast near " + fiber_ + " = " + std::to_string(ta));
    double tm = 0.5 * (ta + tb);
    double rm = raw_angle(base_point, tm);
    return self(self, ta, ra, tm, rm, depth + 1) + self(self, tm, rm, tb, rb, depth + 1);
  };

  for (int k = 1; k <= steps; ++k) {
    double tb = t0 + (t1 - t0) * k / steps;
    double rb = raw_angle(base_point, tb);
    s += advance(advance, out.t.back(), r, tb, rb, 0);
    r = rb;
    out.t.push_back(tb);
    out.angle.push_back(s);
  }
  return out;
}

double Development::angle(const Point& base_point, double t) const {
  double start = fiber_start();
  int steps = std::max(64, static_cast<int>(std::ceil(256.0 * std::abs(t - start) / fiber_length())));
  return trace(base_point, start, t, steps).angle.back();
}

double development_angle(const Distribution2& d, const ContactFrame& frame, const std::string& fiber,
                         const Point& base_point, double t, const SamplePlan& plan, const Tolerances& tol) {
  return Development(d, frame, fiber, plan, tol).angle(base_point, t);
}

ScalarExpr develop_section(const ContactFrame& frame, const ScalarExpr& g, int n, const SamplePlan& plan) {
  if (n < 0) throw PreconditionError("twist must be non-negative, got " + std::to_string(n));
  const Chart& chart = *frame.chart();
  for (const auto& v : g.free_variables())
    if (!chart.index_of(v)) throw PreconditionError("g depends on '" + v + "', which is not a base coordinate");
  std::vector<ScalarExpr> one{g};
  CompiledExprs compiled(one, chart.names());
  double lo = std::numeric_limits<double>::infinity();
  for (const Point& p : sample_points(chart, plan)) lo = std::min(lo, compiled.evaluate(p)[0]);
  if (!(lo > 0.0) || lo > kPi * (1 + 1e-12)) {
    std::ostringstream os;
    os << "angle function must satisfy 0 < min g <= pi, got min g = " << lo;
    throw PreconditionError(os.str());
  }
  return g + ScalarExpr::constant(n) * ScalarExpr::named_constant("pi");
}

}  // namespace engel

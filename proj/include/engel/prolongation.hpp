#pragma once

#include <string>
#include <vector>

#include "engel/structures.hpp"

namespace engel {

/// Positively oriented frame (V0, V1) of a contact plane field on a 3-chart.
class ContactFrame {
public:
  ContactFrame(VectorField v0, VectorField v1);

  const VectorField& v0() const noexcept { return v0_; }
  const VectorField& v1() const noexcept { return v1_; }
  const ChartPtr& chart() const noexcept { return v0_.chart(); }

  /// Rank of (V0, V1) is 2 and of (V0, V1, [V0, V1]) is 3 at every sample.
  VerificationReport validate(const SamplePlan& plan, const Tolerances& tol = {}) const;
  /// (V1, V0): same plane, opposite orientation.
  ContactFrame swapped() const { return {v1_, v0_}; }

private:
  VectorField v0_;
  VectorField v1_;
};

/// base x fiber, fiber appended as the last coordinate.
ChartPtr product_chart(const ChartPtr& base, const Coordinate& fiber);
/// Fiber coordinate theta with period 2 pi.
Coordinate theta_circle();
/// A base field viewed on a product chart (zero fiber component).
VectorField lift(const VectorField& v, const ChartPtr& product);

struct ProlongedEngel {
  ContactFrame base;
  int n;
  Distribution2 frame;  // (d/dtheta, cos(n theta/2) V0 + sin(n theta/2) V1)
};

/// n-fold prolongation on base x S^1. Validates the contact frame on `plan`
/// (base coordinates) and throws PreconditionError if it is not contact.
ProlongedEngel prolong(const ContactFrame& frame, int n, const SamplePlan& plan = {},
                       const Tolerances& tol = {});

/// Annihilator of D^2, after checking that d/d(fiber) spans the characteristic
/// line field. Throws PreconditionError otherwise.
KForm fiber_characteristic_form(const Distribution2& d, const std::string& fiber, const SamplePlan& plan,
                                const Tolerances& tol = {});

/// Contact form on the base induced on the section {fiber = section}.
KForm deprolong(const Distribution2& d, const std::string& fiber, double section, const SamplePlan& plan,
                const Tolerances& tol = {});

/// Largest principal angle between ker(alpha) and span(V0, V1) over the points.
double max_kernel_angle(const KForm& alpha, const ContactFrame& frame, const std::vector<Point>& points);

/// Generator of D with symbolically zero fiber component.
VectorField fiber_free_generator(const Distribution2& d, const std::string& fiber);

struct FiberTrace {
  std::vector<double> t;
  std::vector<double> angle;  // unwrapped, angle[0] in [0, pi)
};

struct LineFit {
  double slope;
  double intercept;
  double max_deviation;
};

LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y);

/// Development mapping of D into the frame angle of (V0, V1), tracked along fibers.
class Development {
public:
  /// Verifies the fiber is characteristic (on `plan`) and compiles the
  /// fiber-free generator.
  Development(const Distribution2& d, const ContactFrame& frame, std::string fiber, const SamplePlan& plan,
              const Tolerances& tol = {});

  const ChartPtr& chart() const noexcept { return chart_; }
  const std::string& fiber() const noexcept { return fiber_; }
  std::size_t fiber_index() const noexcept { return fiber_index_; }
  double fiber_start() const;
  double fiber_length() const;

  /// Angle of the projected line in [0, pi); throws VerificationError if the
  /// projection onto (V0, V1) leaves a residual above the tolerance.
  double raw_angle(const Point& base_point, double t) const;
  /// Unwrapped angle from t0 to t1 over `steps` equal steps, each refined
  /// until consecutive raw angles differ by less than pi/4.
  FiberTrace trace(const Point& base_point, double t0, double t1, int steps) const;
  /// Unwrapped angle at t, started in [0, pi) at the fiber start.
  double angle(const Point& base_point, double t) const;

  /// Coefficients (a, b) of the projected fiber-free generator in (V0, V1).
  std::pair<double, double> coefficients(const Point& base_point, double t) const;

  const VectorField& generator() const noexcept { return generator_; }

private:
  Point full_point(const Point& base_point, double t) const;

  ChartPtr chart_;
  std::string fiber_;
  std::size_t fiber_index_;
  Tolerances tol_;
  VectorField generator_;
  CompiledExprs compiled_;  // generator components, then V0, V1 lifted
};

double development_angle(const Distribution2& d, const ContactFrame& frame, const std::string& fiber,
                         const Point& base_point, double t, const SamplePlan& plan, const Tolerances& tol = {});

/// Graph function g + n pi of the developed end section; requires 0 < min g <= pi on the base samples.
ScalarExpr develop_section(const ContactFrame& frame, const ScalarExpr& g, int n, const SamplePlan& plan);

}  // namespace engel

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "engel/invariants.hpp"

namespace engel {

/// Data for D(xi, F0, F1, n): F0 is spanned by V0, F1 by a V0 + b V1.
struct ExtensionSpec {
  ContactFrame frame;
  ScalarExpr a;
  ScalarExpr b;
  int n = 0;
  /// Angle function supplied directly; must agree with (a, b) modulo pi.
  std::optional<ScalarExpr> g;
};

/// Angle g with (cos g, sin g) parallel to (a, b), normalized to 0 < min g <= pi.
struct AngleFunction {
  std::optional<ScalarExpr> symbolic;
  std::vector<Point> points;  // base grid
  std::vector<double> values;
  double min = 0.0;
  double max = 0.0;
  std::vector<std::string> warnings;
};

AngleFunction legendrian_angle_function(const ContactFrame& frame, const ScalarExpr& a, const ScalarExpr& b,
                                        const SamplePlan& plan, const Tolerances& tol = {},
                                        const std::optional<ScalarExpr>& user_g = std::nullopt);

/// Interval fiber t in [0, 1].
Coordinate unit_interval();

struct Extension {
  ExtensionSpec spec;
  ScalarExpr g;
  AngleFunction angle;
  Distribution2 frame;  // (d/dt, V^n)
  std::vector<std::string> warnings;
};

/// Frame (d/dt, cos(t(g + n pi)) V0 + sin(t(g + n pi)) V1) on base x [0, 1],
/// verified to be Engel.
Extension extend(const ExtensionSpec& spec, const SamplePlan& plan, const Tolerances& tol = {});

/// [d/dt, V^n] = U^n and [V^n, U^n] = (g + n pi)[V0, V1]. The second identity
/// is compared modulo span(V0, V1); when g is constant the literal residual is
/// checked as well.
VerificationReport verify_extension_identities(const Extension& ext, const SamplePlan& plan,
                                               const Tolerances& tol = {});

struct FamilySlice {
  double s;
  Extension extension;
  MinimalTwisting mtw;
};

/// One verified extension per grid value; n must change by at most one between neighbours.
std::vector<FamilySlice> extend_family(const std::vector<ExtensionSpec>& specs, const std::vector<double>& s_grid,
                                       const SamplePlan& plan, const Tolerances& tol = {});

}  // namespace engel

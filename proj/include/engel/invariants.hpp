#pragma once

#include <string>
#include <vector>

#include "engel/prolongation.hpp"

namespace engel {

/// Line field span(a V0 + b V1) tangent to a framed contact structure.
struct LegendrianLineField {
  ContactFrame frame;
  ScalarExpr a;
  ScalarExpr b;

  /// a^2 + b^2 >= nonzero at every sample.
  VerificationReport validate(const SamplePlan& plan, const Tolerances& tol = {}) const;
};

struct TwistingNumber {
  int signed_value = 0;
  int abs_value = 0;
  std::vector<Point> base_points;
  std::vector<double> totals;  // (s(end) - s(start)) / pi per base point
};

/// Degree of the fiber map into RP^1, counted in half-turns. Every base
/// point must yield the same integer; throws VerificationError otherwise.
TwistingNumber twisting_number(const Distribution2& d, const ContactFrame& frame,
                               const std::vector<Point>& base_points, const SamplePlan& plan,
                               const Tolerances& tol = {}, const std::string& fiber = "theta");

struct MinimalTwisting {
  int value = 0;
  double min_angle = 0.0;  // min over base samples of the angle change across the fiber
  std::vector<Point> base_points;
  std::vector<double> angles;
  std::vector<std::string> warnings;
};

/// floor(min_p phi(p, 1) / pi) for D on M x I, phi measured from the t = 0 line.
MinimalTwisting minimal_twisting_number(const Distribution2& d, const ContactFrame& frame, const SamplePlan& plan,
                                        const Tolerances& tol = {}, const std::string& fiber = "t");

/// Line field cut out on the slice {fiber = t}, expressed in the frame.
LegendrianLineField induced_legendrian_line(const Distribution2& d, const ContactFrame& frame, double t,
                                            const SamplePlan& plan, const Tolerances& tol = {},
                                            const std::string& fiber = "t");

/// Max over samples of the angle between the two lines, in [0, pi/2].
double line_angle_distance(const LegendrianLineField& l1, const LegendrianLineField& l2, const SamplePlan& plan);

}  // namespace engel

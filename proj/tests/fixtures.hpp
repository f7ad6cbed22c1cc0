#pragma once

// Contact frames shared by the higher-level tests.

#include <numbers>

#include "engel/prolongation.hpp"

namespace engel::test_support {

inline ChartPtr r3_box() {
  return make_chart({Coordinate::interval("x", -1, 1), Coordinate::interval("y", -1, 1),
                     Coordinate::interval("z", -1, 1)});
}

inline ChartPtr t3_chart() {
  const double p = 2 * std::numbers::pi;
  return make_chart({Coordinate::circle("x", p), Coordinate::circle("y", p), Coordinate::circle("z", p)});
}

// xi = ker(dy - z dx)
inline ContactFrame standard_frame() {
  auto c = r3_box();
  return {VectorField::parse(c, {"0", "0", "1"}), VectorField::parse(c, {"1", "z", "0"})};
}

// xi = ker(cos z dx - sin z dy)
inline ContactFrame torus_frame() {
  auto c = t3_chart();
  return {VectorField::parse(c, {"sin(z)", "cos(z)", "0"}), VectorField::parse(c, {"0", "0", "1"})};
}

}  // namespace engel::test_support

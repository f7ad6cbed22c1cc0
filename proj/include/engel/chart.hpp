#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace engel {

struct Coordinate {
  std::string name;
  double lo = 0.0;  // sampling interval; for periodic coordinates [lo, lo + period)
  double hi = 1.0;
  bool periodic = false;
  double period = 0.0;

  static Coordinate interval(std::string name, double lo, double hi);
  static Coordinate circle(std::string name, double period, double lo = 0.0);
};

/// Trivialized product chart (R^3, T^3, M x S^1, M x I, ...) with a sampling box.
class Chart {
public:
  explicit Chart(std::vector<Coordinate> coords);

  std::size_t dim() const noexcept { return coords_.size(); }
  const Coordinate& coord(std::size_t i) const { return coords_.at(i); }
  const std::vector<Coordinate>& coords() const noexcept { return coords_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::set<std::string> name_set() const { return {names_.begin(), names_.end()}; }
  std::optional<std::size_t> index_of(const std::string& name) const;
  std::size_t require_index(const std::string& name) const;

  /// The chart with one coordinate removed (base of a product chart).
  Chart without(const std::string& name) const;
  /// The chart with a coordinate appended (product with a fiber).
  Chart with(const Coordinate& fiber) const;

  friend bool operator==(const Chart& a, const Chart& b);

private:
  std::vector<Coordinate> coords_;
  std::vector<std::string> names_;
};

using ChartPtr = std::shared_ptr<const Chart>;

ChartPtr make_chart(std::vector<Coordinate> coords);

using Point = std::vector<double>;

struct SamplePlan {
  /// Grid resolution per coordinate; a single entry applies to every axis.
  std::vector<int> grid{5};
  int random = 0;
  std::uint64_t seed = 0;

  int resolution(std::size_t axis) const;
};

/// Deterministic grid (first coordinate slowest) followed by seeded uniform
/// random points. Periodic coordinates are sampled in [lo, lo + period).
std::vector<Point> sample_points(const Chart& chart, const SamplePlan& plan);

/// Uniform random points in the sampling box, reproducible from `seed`.
std::vector<Point> random_points(const Chart& chart, std::size_t count, std::uint64_t seed);

}  // namespace engel

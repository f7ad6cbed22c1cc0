#include "engel/chart.hpp"

#include <random>

#include "engel/error.hpp"

namespace engel {

Coordinate Coordinate::interval(std::string name, double lo, double hi) {
  return Coordinate{std::move(name), lo, hi, false, 0.0};
}

Coordinate Coordinate::circle(std::string name, double period, double lo) {
  return Coordinate{std::move(name), lo, lo + period, true, period};
}

Chart::Chart(std::vector<Coordinate> coords) : coords_(std::move(coords)) {
  if (coords_.size() < 3 || coords_.size() > 4)
    throw PreconditionError("chart dimension must be 3 or 4, got " + std::to_string(coords_.size()));
  std::set<std::string> seen;
  for (auto& c : coords_) {
    if (c.name.empty()) throw PreconditionError("empty coordinate name");
    if (!seen.insert(c.name).second) throw PreconditionError("duplicate coordinate '" + c.name + "'");
    if (c.periodic) {
      if (!(c.period > 0.0))
        throw PreconditionError("periodic coordinate '" + c.name + "' needs a positive period");
      c.hi = c.lo + c.period;
    } else if (!(c.hi > c.lo)) {
      throw PreconditionError("coordinate '" + c.name + "' has an empty sampling interval");
    }
    names_.push_back(c.name);
  }
}

std::optional<std::size_t> Chart::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return i;
  return std::nullopt;
}

std::size_t Chart::require_index(const std::string& name) const {
  if (auto i = index_of(name)) return *i;
  throw PreconditionError("chart has no coordinate '" + name + "'");
}

Chart Chart::without(const std::string& name) const {
  std::size_t k = require_index(name);
  std::vector<Coordinate> rest;
  for (std::size_t i = 0; i < coords_.size(); ++i)
    if (i != k) rest.push_back(coords_[i]);
  return Chart(std::move(rest));
}

Chart Chart::with(const Coordinate& fiber) const {
  std::vector<Coordinate> all = coords_;
  all.push_back(fiber);
  return Chart(std::move(all));
}

bool operator==(const Chart& a, const Chart& b) {
  if (a.dim() != b.dim()) return false;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const auto& x = a.coords_[i];
    const auto& y = b.coords_[i];
    if (x.name != y.name || x.lo != y.lo || x.hi != y.hi || x.periodic != y.periodic ||
        x.period != y.period)
      return false;
  }
  return true;
}

ChartPtr make_chart(std::vector<Coordinate> coords) {
  return std::make_shared<const Chart>(std::move(coords));
}

int SamplePlan::resolution(std::size_t axis) const {
  if (grid.empty()) throw PreconditionError("sample plan has no grid resolution");
  int r = grid.size() == 1 ? grid.front() : grid.at(axis);
  if (r < 2) throw PreconditionError("grid resolution must be at least 2");
  return r;
}

namespace {

// 53 random bits mapped to [0, 1); independent of the standard library's
// distribution implementation so point lists match across toolchains.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<Point> random_points(const Chart& chart, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Point> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Point p(chart.dim());
    for (std::size_t i = 0; i < chart.dim(); ++i) {
      const auto& c = chart.coord(i);
      p[i] = c.lo + (c.hi - c.lo) * unit(rng);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Point> sample_points(const Chart& chart, const SamplePlan& plan) {
  const std::size_t dim = chart.dim();
  std::vector<int> res(dim);
  std::size_t total = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    res[i] = plan.resolution(i);
    total *= static_cast<std::size_t>(res[i]);
  }
  if (plan.random < 0) throw PreconditionError("random sample count must be non-negative");
  std::vector<Point> out;
  out.reserve(total + static_cast<std::size_t>(plan.random));
  std::vector<int> idx(dim, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Point p(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const auto& c = chart.coord(i);
      p[i] = c.periodic ? c.lo + c.period * idx[i] / res[i]
                        : c.lo + (c.hi - c.lo) * idx[i] / (res[i] - 1);
    }
    out.push_back(std::move(p));
    for (std::size_t i = dim; i-- > 0;) {
      if (++idx[i] < res[i]) break;
      idx[i] = 0;
    }
  }
  auto extra = random_points(chart, static_cast<std::size_t>(plan.random), plan.seed);
  out.insert(out.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
  return out;
}

}  // namespace engel

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "engel/calculus.hpp"

namespace engel {

/// Thresholds shared by every verification. All "never vanishing" and
/// "identically zero" thresholds are relative to a scale measured over the
/// sampling box, so rescaling a frame or form does not change verdicts.
struct Tolerances {
  double rank = 1e-7;     // singular-value ratio for numerical rank
  double nv = 1e-6;       // never-vanishing: |v(p)| >= nv * max_q |v(q)|
  double zero = 1e-9;     // identically zero: |v(p)| <= zero * (product of factor norms)
  double nonzero = 1e-8;  // squared norm floor for fields declared non-vanishing
  double proj = 1e-8;     // least-squares residual when projecting onto a frame
  double period = 1e-9;   // period-respect defect
  double fd_step = 1e-3;  // finite-difference step of the bracket oracle
};

enum class CheckKind { NeverVanishing, IdenticallyZero, Rank, Residual };

/// One pointwise condition evaluated over the whole sample set.
struct CheckResult {
  std::string name;
  CheckKind kind = CheckKind::NeverVanishing;
  std::vector<double> values;  // per-point witness (magnitude, singular-value ratio, residual)
  std::vector<int> ranks;      // per-point numerical rank, rank checks only
  int expected_rank = 0;
  double min = 0.0;
  double max = 0.0;
  double scale = 0.0;  // reference scale the thresholds are relative to
  double relative_min = 0.0;  // never-vanishing: min / max
  bool pass = false;
  std::optional<std::size_t> first_failure;
};

struct FailurePoint {
  std::string check;
  std::size_t index;
  Point point;
};

struct VerificationReport {
  std::string structure;
  Tolerances tolerances;
  std::size_t sample_count = 0;
  std::vector<CheckResult> checks;
  bool pass = false;
  std::optional<FailurePoint> first_failure;
  std::vector<std::string> warnings;

  const CheckResult& check(const std::string& name) const;
  /// Recompute `pass` and `first_failure` from the sub-checks.
  void finalize(const std::vector<Point>& points);
};

/// Rank-2 plane field given by a frame.
struct Distribution2 {
  VectorField x;
  VectorField y;

  Distribution2(VectorField x, VectorField y);
  const ChartPtr& chart() const { return x.chart(); }
};

struct EngelPair {
  KForm alpha;
  KForm beta;
};

VerificationReport check_contact_3d(const KForm& alpha, const SamplePlan& plan, const Tolerances& tol = {});
VerificationReport check_even_contact(const KForm& beta, const SamplePlan& plan, const Tolerances& tol = {});

/// Conditions in order: alpha^beta^d(alpha) never vanishes,
/// alpha^beta^d(beta) == 0, beta^d(beta) never vanishes.
VerificationReport check_engel_pair(const EngelPair& pair, const SamplePlan& plan, const Tolerances& tol = {});

struct EngelPairOrientation {
  VerificationReport as_given;
  VerificationReport swapped;
  /// "as_given", "swapped", "both" or "neither".
  std::string satisfied_by;
};

/// Tries (alpha, beta) and (beta, alpha) and reports which ordering holds.
EngelPairOrientation orient_engel_pair(const EngelPair& pair, const SamplePlan& plan,
                                       const Tolerances& tol = {});

/// Ranks of [X, Y, [X,Y]] and [X, Y, [X,Y], [X,[X,Y]], [Y,[X,Y]]] must be 3 and 4.
VerificationReport check_engel_frame(const Distribution2& d, const SamplePlan& plan, const Tolerances& tol = {});

/// (X, Y, [X, Y]); throws VerificationError if the rank drops below 3 at a sample.
std::array<VectorField, 3> derived_square(const Distribution2& d, const SamplePlan& plan,
                                          const Tolerances& tol = {});

/// 1-form annihilating a rank-3 frame on a 4-chart, built from signed 3x3 minors.
KForm annihilator_1form(const std::array<VectorField, 3>& frame, const SamplePlan& plan,
                        const Tolerances& tol = {});

/// Solves X0 _| volume = beta ^ d(beta) for X0.
VectorField characteristic_vector_field(const KForm& beta, const KForm& volume, const SamplePlan& plan,
                                        const Tolerances& tol = {});

/// (L_X0 beta) ^ beta == 0 and beta(X0) == 0 at every sample.
VerificationReport check_characteristic(const VectorField& x0, const KForm& beta, const SamplePlan& plan,
                                        const Tolerances& tol = {});

/// Rank of [X0, V, [X0, V]] is 3 at every sample: the plane field spanned by
/// a characteristic direction X0 and V twists along X0.
VerificationReport check_twisting_condition(const VectorField& x0, const VectorField& v,
                                            const SamplePlan& plan, const Tolerances& tol = {});

/// Numerical rank of the fields as columns is `expected` at every sample.
CheckResult check_rank(const std::string& name, const std::vector<VectorField>& fields, int expected,
                       const std::vector<Point>& points, const Tolerances& tol = {});

/// Largest principal angle between D at p and at p + period, over periodic coordinates.
double plane_period_defect(const Distribution2& d, const std::vector<Point>& points);

}  // namespace engel

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "engel/calculus.hpp"
#include "engel/error.hpp"
#include "random_expr.hpp"

using namespace engel;

namespace {

ChartPtr r3() {
  return make_chart({Coordinate::interval("x", -1, 1), Coordinate::interval("y", -1, 1),
                     Coordinate::interval("z", -1, 1)});
}

ChartPtr r4() {
  return make_chart({Coordinate::interval("x", -1, 1), Coordinate::interval("y", -1, 1),
                     Coordinate::interval("z", -1, 1), Coordinate::interval("w", -1, 1)});
}

ScalarExpr num(double v) { return ScalarExpr::constant(v); }

double eval_at(const ScalarExpr& e, const Chart& chart, const Point& p) {
  VarBinding b;
  for (std::size_t i = 0; i < chart.dim(); ++i) b[chart.names()[i]] = p[i];
  return evaluate(e, b);
}

double det(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  double d = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (m[piv][c] == 0.0) return 0.0;
    if (piv != c) {
      std::swap(m[piv], m[c]);
      d = -d;
    }
    d *= m[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return d;
}

// Oracle: a k-form evaluated on k vectors straight from the definition,
// sum over stored index tuples of coefficient times the k x k minor.
double form_on_vectors(const KForm& w, const Point& p, const std::vector<std::vector<double>>& vs) {
  double total = 0.0;
  for (const auto& [s, c] : w.coefficients()) {
    auto idx = indices_of(s);
    std::vector<std::vector<double>> minor(idx.size(), std::vector<double>(vs.size()));
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < vs.size(); ++j) minor[r][j] = vs[j][idx[r]];
    total += eval_at(c, *w.chart(), p) * (idx.empty() ? 1.0 : det(minor));
  }
  return total;
}

std::vector<double> basis(std::size_t n, std::size_t i) {
  std::vector<double> e(n, 0.0);
  e[i] = 1.0;
  return e;
}

VectorField random_poly_field(ChartPtr chart, std::mt19937_64& rng) {
  // Random quadratic polynomial components.
  std::uniform_int_distribution<int> coef(-2, 2);
  std::vector<ScalarExpr> comps;
  const auto& names = chart->names();
  for (std::size_t i = 0; i < chart->dim(); ++i) {
    ScalarExpr acc = num(coef(rng));
    for (std::size_t a = 0; a < names.size(); ++a) {
      acc = acc + num(coef(rng)) * ScalarExpr::variable(names[a]);
      for (std::size_t b = a; b < names.size(); ++b)
        acc = acc + num(coef(rng)) * ScalarExpr::variable(names[a]) * ScalarExpr::variable(names[b]);
    }
    comps.push_back(simplify(acc));
  }
  return VectorField(chart, comps);
}

VectorField random_trig_field(ChartPtr chart, std::uint64_t seed) {
  test_support::RandomExprGen gen(chart->names(), seed);
  std::vector<ScalarExpr> comps;
  for (std::size_t i = 0; i < chart->dim(); ++i) comps.push_back(gen.generate(3));
  return VectorField(chart, comps);
}

std::vector<double> eval_field(const VectorField& v, const Point& p) { return v.at(p); }

}  // namespace

// ---- sample plans ----

TEST(SamplePoints, CornersOfUnitCube) {
  auto chart = make_chart({Coordinate::interval("x", 0, 1), Coordinate::interval("y", 0, 1),
                           Coordinate::interval("z", 0, 1)});
  auto pts = sample_points(*chart, SamplePlan{{2}, 0, 0});
  ASSERT_EQ(pts.size(), 8u);
  for (const auto& p : pts)
    for (double c : p) EXPECT_TRUE(c == 0.0 || c == 1.0);
}

TEST(SamplePoints, DeterministicForSeed) {
  auto chart = r4();
  SamplePlan plan{{3}, 50, 42};
  EXPECT_EQ(sample_points(*chart, plan), sample_points(*chart, plan));
  SamplePlan other{{3}, 50, 43};
  EXPECT_NE(sample_points(*chart, plan), sample_points(*chart, other));
}

TEST(SamplePoints, GridCount) {
  EXPECT_EQ(sample_points(*r4(), SamplePlan{{5}, 0, 0}).size(), 625u);
}

TEST(SamplePoints, PeriodicAxisExcludesEndpoint) {
  auto chart = make_chart({Coordinate::interval("x", -1, 1), Coordinate::interval("y", -1, 1),
                           Coordinate::circle("z", 2 * std::numbers::pi)});
  auto pts = sample_points(*chart, SamplePlan{{4}, 100, 1});
  for (const auto& p : pts) {
    EXPECT_GE(p[2], 0.0);
    EXPECT_LT(p[2], 2 * std::numbers::pi);
  }
}

TEST(SamplePoints, RejectsBadResolution) {
  EXPECT_THROW(sample_points(*r3(), SamplePlan{{1}, 0, 0}), PreconditionError);
}

TEST(Chart, Invariants) {
  EXPECT_THROW(make_chart({Coordinate::interval("x", 0, 1), Coordinate::interval("x", 0, 1),
                           Coordinate::interval("z", 0, 1)}),
               PreconditionError);
  EXPECT_THROW(make_chart({Coordinate::interval("x", 0, 1), Coordinate::interval("y", 0, 1)}),
               PreconditionError);
  EXPECT_THROW(make_chart({Coordinate::interval("x", 0, 1), Coordinate::interval("y", 0, 1),
                           Coordinate::circle("z", 0.0)}),
               PreconditionError);
}

// ---- Lie bracket ----

TEST(LieBracket, SelfBracketVanishes) {
  auto c = r4();
  auto x = random_trig_field(c, 3);
  auto b = lie_bracket(x, x);
  for (const auto& comp : b.components()) EXPECT_TRUE(comp.is_zero()) << comp.to_string();
}

TEST(LieBracket, ContactFrameOnR3) {
  auto c = r3();
  auto dz = VectorField::parse(c, {"0", "0", "1"});
  auto v = VectorField::parse(c, {"1", "z", "0"});
  auto b = lie_bracket(dz, v);
  EXPECT_EQ(b[0], num(0));
  EXPECT_EQ(b[1], num(1));
  EXPECT_EQ(b[2], num(0));
  for (const auto& p : random_points(*c, 20, 5)) {
    auto fd = fd_lie_bracket(dz, v, p, 1e-3);
    EXPECT_NEAR(fd[0], 0.0, 1e-6);
    EXPECT_NEAR(fd[1], 1.0, 1e-6);
    EXPECT_NEAR(fd[2], 0.0, 1e-6);
  }
}

TEST(LieBracket, EngelKernelFrameOnR4) {
  auto c = r4();
  auto dw = VectorField::parse(c, {"0", "0", "0", "1"});
  auto v = VectorField::parse(c, {"1", "z", "w", "0"});
  auto b = lie_bracket(dw, v);
  EXPECT_EQ(b.components(), (std::vector<ScalarExpr>{num(0), num(0), num(1), num(0)}));
  for (const auto& p : random_points(*c, 20, 6)) {
    auto fd = fd_lie_bracket(dw, v, p, 1e-3);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(fd[i], i == 2 ? 1.0 : 0.0, 1e-6);
  }
}

TEST(LieBracket, ChartMismatch) {
  auto a = VectorField::coordinate(r3(), "x");
  auto b = VectorField::coordinate(r4(), "x");
  EXPECT_THROW(lie_bracket(a, b), ChartMismatch);
}

TEST(FdLieBracket, SelfBracketIsZero) {
  auto c = r4();
  auto x = random_trig_field(c, 8);
  for (const auto& p : random_points(*c, 10, 2)) {
    for (double v : fd_lie_bracket(x, x, p, 1e-3)) EXPECT_NEAR(v, 0.0, 1e-12);
  }
}

TEST(FdLieBracket, KnownPoint) {
  auto c = r3();
  auto dz = VectorField::parse(c, {"0", "0", "1"});
  auto v = VectorField::parse(c, {"1", "z", "0"});
  Point p{0.3, -0.2, 0.7};
  auto fd = fd_lie_bracket(dz, v, p, 1e-3);
  EXPECT_NEAR(fd[0], 0.0, 1e-6);
  EXPECT_NEAR(fd[1], 1.0, 1e-6);
  EXPECT_NEAR(fd[2], 0.0, 1e-6);
}

TEST(FdLieBracket, SecondOrderConvergence) {
  auto c = r4();
  auto x = VectorField::parse(c, {"sin(y*z)", "exp(x/2)", "w^3", "cos(2*x)*y"});
  auto y = VectorField::parse(c, {"cos(w)*x", "sin(x+z)", "x*y*z", "exp(sin(w))"});
  auto exact = lie_bracket(x, y);
  double e1 = 0.0, e2 = 0.0;
  for (const auto& p : random_points(*c, 100, 9)) {
    auto s = exact.at(p);
    auto f1 = fd_lie_bracket(x, y, p, 1e-3);
    auto f2 = fd_lie_bracket(x, y, p, 5e-4);
    for (std::size_t i = 0; i < 4; ++i) {
      e1 = std::max(e1, std::abs(f1[i] - s[i]));
      e2 = std::max(e2, std::abs(f2[i] - s[i]));
    }
  }
  EXPECT_LE(e1, 1e-5);
  EXPECT_GE(e1 / e2, 3.5);
  EXPECT_LE(e1 / e2, 4.5);
}

// ---- exterior derivative ----

TEST(ExteriorDerivative, ContactForm) {
  auto c = r3();
  auto dalpha = exterior_derivative(KForm::parse_one_form(c, "dy - z*dx"));
  EXPECT_EQ(dalpha.degree(), 2);
  ASSERT_EQ(dalpha.coefficients().size(), 1u);
  EXPECT_EQ(dalpha.coefficient(index_set({0, 2})), num(1));
  EXPECT_EQ(dalpha.coefficient({"z", "x"}), num(-1));
}

TEST(ExteriorDerivative, ConstantCoefficients) {
  auto c = r4();
  EXPECT_TRUE(exterior_derivative(KForm::parse_one_form(c, "2*dx - 3*dw + pi*dz")).is_zero());
}

TEST(ExteriorDerivative, SecondEngelForm) {
  auto c = r4();
  auto d = exterior_derivative(KForm::parse_one_form(c, "dz - w*dx"));
  ASSERT_EQ(d.coefficients().size(), 1u);
  EXPECT_EQ(d.coefficient(index_set({0, 3})), num(1));
}

TEST(ExteriorDerivative, DegreeOverflow) {
  auto c = r3();
  auto vol = KForm::monomial(c, num(1), {"x", "y", "z"});
  EXPECT_THROW(exterior_derivative(vol), DegreeOverflow);
}

TEST(ExteriorDerivative, MatchesCoordinateFreeFormula) {
  // d(w)(X, Y) = X(w(Y)) - Y(w(X)) - w([X, Y]) for constant coordinate fields
  // reduces to the antisymmetrized Jacobian of the coefficients.
  auto c = r4();
  auto w = KForm::one_form(c, random_trig_field(c, 12).components());
  auto dw = exterior_derivative(w);
  for (const auto& p : random_points(*c, 10, 4)) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        double lhs = form_on_vectors(dw, p, {basis(4, i), basis(4, j)});
        double rhs = eval_at(partial_derivative(w.coefficient(1u << j), c->names()[i]), *c, p) -
                     eval_at(partial_derivative(w.coefficient(1u << i), c->names()[j]), *c, p);
        EXPECT_NEAR(lhs, rhs, 1e-12);
      }
    }
  }
}

// ---- wedge ----

TEST(Wedge, RepeatedDifferentialVanishes) {
  auto c = r3();
  auto dx = KForm::parse_one_form(c, "dx");
  EXPECT_TRUE(wedge(dx, dx).is_zero());
  auto w = KForm::parse_one_form(c, "y*dx + sin(z)*dy - x*dz");
  EXPECT_TRUE(wedge(w, w).is_zero());
}

TEST(Wedge, ContactVolume) {
  auto c = r3();
  auto a = KForm::parse_one_form(c, "dy - z*dx");
  auto v = wedge(a, exterior_derivative(a));
  EXPECT_EQ(v.coefficient(index_set({0, 1, 2})), num(-1));
}

TEST(Wedge, EngelTopForm) {
  auto c = r4();
  auto alpha = KForm::parse_one_form(c, "dz - w*dx");
  auto beta = KForm::parse_one_form(c, "dy - z*dx");
  auto dxdw = KForm::monomial(c, num(1), {"x", "w"});
  auto top = wedge(wedge(alpha, beta), dxdw);
  EXPECT_EQ(top.coefficient(index_set({0, 1, 2, 3})), num(-1));
  // Oracle: the wedge of four 1-forms on (e1..e4) is det[form_i(e_j)].
  auto dx = KForm::parse_one_form(c, "dx");
  auto dw = KForm::parse_one_form(c, "dw");
  for (const auto& p : random_points(*c, 5, 1)) {
    std::vector<std::vector<double>> m;
    for (const KForm* f : {&alpha, &beta, &dx, &dw}) {
      std::vector<double> row;
      for (std::size_t j = 0; j < 4; ++j) row.push_back(form_on_vectors(*f, p, {basis(4, j)}));
      m.push_back(row);
    }
    std::vector<std::vector<double>> e{basis(4, 0), basis(4, 1), basis(4, 2), basis(4, 3)};
    EXPECT_NEAR(form_on_vectors(top, p, e), det(m), 1e-14);
  }
}

TEST(Wedge, DegreeOverflow) {
  auto c = r3();
  auto two = KForm::monomial(c, num(1), {"x", "y"});
  EXPECT_THROW(wedge(two, two), DegreeOverflow);
}

// ---- interior product ----

TEST(InteriorProduct, LastSlotOfVolume) {
  auto c = r4();
  auto vol = KForm::monomial(c, num(1), {"x", "y", "z", "w"});
  auto r = interior_product(VectorField::coordinate(c, "w"), vol);
  EXPECT_EQ(r.degree(), 3);
  ASSERT_EQ(r.coefficients().size(), 1u);
  EXPECT_EQ(r.coefficient(index_set({0, 1, 2})), num(-1));
}

TEST(InteriorProduct, TwiceIsZero) {
  auto c = r4();
  auto x = random_trig_field(c, 21);
  auto w = wedge(KForm::one_form(c, random_trig_field(c, 22).components()),
                 KForm::one_form(c, random_trig_field(c, 23).components()));
  auto twice = interior_product(x, interior_product(x, w));
  for (const auto& p : random_points(*c, 20, 2)) EXPECT_NEAR(form_on_vectors(twice, p, {}), 0.0, 1e-12);
}

TEST(InteriorProduct, TwoForm) {
  auto c = r3();
  auto r = interior_product(VectorField::coordinate(c, "y"), KForm::monomial(c, num(1), {"x", "y"}));
  ASSERT_EQ(r.coefficients().size(), 1u);
  EXPECT_EQ(r.coefficient(index_set({0})), num(-1));
}

TEST(InteriorProduct, MatchesFirstSlotEvaluation) {
  auto c = r4();
  auto x = random_trig_field(c, 31);
  auto w = wedge(wedge(KForm::one_form(c, random_trig_field(c, 32).components()),
                       KForm::one_form(c, random_trig_field(c, 33).components())),
                 KForm::one_form(c, random_trig_field(c, 34).components()));
  auto r = interior_product(x, w);
  for (const auto& p : random_points(*c, 5, 7)) {
    auto xv = eval_field(x, p);
    EXPECT_NEAR(form_on_vectors(r, p, {basis(4, 0), basis(4, 2)}),
                form_on_vectors(w, p, {xv, basis(4, 0), basis(4, 2)}), 1e-10);
  }
}

// ---- Lie derivative ----

TEST(LieDerivative, CharacteristicFieldOfStandardStructure) {
  auto c = r4();
  EXPECT_TRUE(lie_derivative_form(VectorField::coordinate(c, "w"), KForm::parse_one_form(c, "dy - z*dx")).is_zero());
}

TEST(LieDerivative, NaturalOnExactForms) {
  auto c = r3();
  ScalarExpr g = parse_scalar_expr("x*y", c->name_set());
  auto X = VectorField::coordinate(c, "x");
  auto lhs = lie_derivative_form(X, exterior_derivative(KForm::scalar(c, g)));
  auto rhs = exterior_derivative(KForm::scalar(c, simplify(directional_derivative(X, g))));
  EXPECT_EQ(lhs.simplified().coefficients(), rhs.coefficients());
  EXPECT_EQ(rhs.coefficient(index_set({1})), num(1));
  EXPECT_EQ(rhs.coefficients().size(), 1u);
}

TEST(LieDerivative, LeibnizInTheField) {
  // L_{fX} w - f L_X w = df ^ (X _| w)
  auto c = r4();
  ScalarExpr f = parse_scalar_expr("1 + x^2*sin(w)", c->name_set());
  auto X = random_trig_field(c, 41);
  auto w = KForm::one_form(c, random_trig_field(c, 42).components());
  auto lhs = lie_derivative_form(f * X, w) - f * lie_derivative_form(X, w);
  auto rhs = wedge(exterior_derivative(KForm::scalar(c, f)), interior_product(X, w));
  auto diff = lhs - rhs;
  for (const auto& p : random_points(*c, 20, 8))
    for (const auto& coef : diff.dense()) EXPECT_NEAR(eval_at(coef, *c, p), 0.0, 1e-9);
}

// ---- invariants ----

TEST(CalculusLaws, DSquaredIsZero) {
  auto c = r4();
  SamplePlan plan{{3}, 20, 0};
  auto pts = sample_points(*c, plan);
  for (std::uint64_t seed = 50; seed < 55; ++seed) {
    auto w = KForm::one_form(c, random_trig_field(c, seed).components());
    auto dd = exterior_derivative(exterior_derivative(w));
    auto dense = dd.dense();
    CompiledExprs compiled(dense, c->names());
    for (const auto& p : pts)
      for (double v : compiled.evaluate(p)) EXPECT_LE(std::abs(v), 1e-12);
  }
}

TEST(CalculusLaws, WedgeGradedAntisymmetry) {
  auto c = r4();
  auto pts = sample_points(*c, SamplePlan{{3}, 20, 0});
  auto a = KForm::one_form(c, random_trig_field(c, 60).components());
  auto b = KForm::one_form(c, random_trig_field(c, 61).components());
  auto ab = wedge(a, b);
  // (1,1): sign -1; (1,2): sign +1.
  auto diff11 = (wedge(a, b) + wedge(b, a)).dense();
  auto diff12 = (wedge(a, ab) - wedge(ab, a)).dense();
  CompiledExprs c11(diff11, c->names());
  CompiledExprs c12(diff12, c->names());
  for (const auto& p : pts) {
    for (double v : c11.evaluate(p)) EXPECT_LE(std::abs(v), 1e-12);
    for (double v : c12.evaluate(p)) EXPECT_LE(std::abs(v), 1e-12);
  }
}

TEST(CalculusLaws, JacobiIdentity) {
  auto c = r4();
  std::mt19937_64 rng(70);
  auto X = random_poly_field(c, rng);
  auto Y = random_poly_field(c, rng);
  auto Z = random_poly_field(c, rng);
  auto jac = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) +
             lie_bracket(Z, lie_bracket(X, Y));
  for (const auto& p : sample_points(*c, SamplePlan{{3}, 20, 0}))
    for (double v : jac.at(p)) EXPECT_LE(std::abs(v), 1e-10);
}

TEST(CalculusLaws, SymbolicBracketAgreesWithOracleAtSecondOrder) {
  auto c = r4();
  auto X = random_trig_field(c, 80);
  auto Y = random_trig_field(c, 81);
  auto exact = lie_bracket(X, Y);
  const double h = 1e-3;
  for (const auto& p : sample_points(*c, SamplePlan{{3}, 20, 0})) {
    auto s = exact.at(p);
    auto f = fd_lie_bracket(X, Y, p, h);
    // Second-derivative scale estimated from the half-step oracle spread.
    auto f2 = fd_lie_bracket(X, Y, p, 2 * h);
    double scale = 1.0;
    for (std::size_t i = 0; i < 4; ++i) scale = std::max(scale, std::abs(f2[i] - f[i]) / (h * h));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LE(std::abs(s[i] - f[i]), 10 * h * h * scale);
  }
}

TEST(OneFormParsing, RejectsNonlinear) {
  auto c = r3();
  EXPECT_THROW(KForm::parse_one_form(c, "dx*dy"), PreconditionError);
  EXPECT_THROW(KForm::parse_one_form(c, "dx + 1"), PreconditionError);
  EXPECT_THROW(KForm::parse_one_form(c, "dq"), UnknownIdentifier);
}

TEST(PeriodDefect, DetectsNonPeriodicExpressions) {
  auto c = make_chart({Coordinate::circle("x", 2 * std::numbers::pi), Coordinate::interval("y", -1, 1),
                       Coordinate::interval("z", -1, 1)});
  auto pts = sample_points(*c, SamplePlan{{3}, 0, 0});
  std::vector<ScalarExpr> good{parse_scalar_expr("cos(x)*y", c->name_set())};
  std::vector<ScalarExpr> bad{parse_scalar_expr("x/4", c->name_set())};
  EXPECT_LE(period_defect(*c, good, pts), 1e-9);
  EXPECT_GT(period_defect(*c, bad, pts), 1.0);
}

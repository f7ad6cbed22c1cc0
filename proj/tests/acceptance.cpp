// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <regex>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "engel/extension.hpp"

using namespace engel;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::string first_failure;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) first_failure = what;
    pass = pass && ok;
  }
};

void print(int id, const std::string& title, Verdict& v, int& failures) {
  std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << "  " << title << v.note.str();
  if (!v.pass) std::cout << "; first failure: " << v.first_failure;
  std::cout << "\n";
  if (!v.pass) ++failures;
}

ChartPtr box(const std::vector<std::string>& names) {
  std::vector<Coordinate> c;
  for (const auto& n : names) c.push_back(Coordinate::interval(n, -1, 1));
  return make_chart(c);
}

ContactFrame standard_frame() {
  auto c = box({"x", "y", "z"});
  return {VectorField::parse(c, {"0", "0", "1"}), VectorField::parse(c, {"1", "z", "0"})};
}

ContactFrame torus_frame() {
  auto c = make_chart({Coordinate::circle("x", 2 * kPi), Coordinate::circle("y", 2 * kPi),
                       Coordinate::circle("z", 2 * kPi)});
  return {VectorField::parse(c, {"sin(z)", "cos(z)", "0"}), VectorField::parse(c, {"0", "0", "1"})};
}

// three angle functions with 0 < min g < pi on the box
struct Foliation {
  const char* a;
  const char* b;
};
const Foliation kFoliations[] = {
    {"0", "1"},
    {"cos(pi/2 + sin(x)/4)", "sin(pi/2 + sin(x)/4)"},
    {"cos(pi/3 + z/4 + x*y/8)", "sin(pi/3 + z/4 + x*y/8)"},
};

ExtensionSpec spec(const ContactFrame& f, const Foliation& fol, int n) {
  auto names = f.chart()->name_set();
  return {f, parse_scalar_expr(fol.a, names), parse_scalar_expr(fol.b, names), n, std::nullopt};
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

bool all_equal(const std::vector<int>& v, int r) {
  return !v.empty() && std::all_of(v.begin(), v.end(), [r](int x) { return x == r; });
}

// ---------------------------------------------------------------- 1

Verdict standard_structures() {
  Verdict v;
  auto c = box({"x", "y", "z", "w"});
  SamplePlan plan{{5}, 200, 0};
  KForm a = KForm::parse_one_form(c, "dz - w*dx");
  KForm b = KForm::parse_one_form(c, "dy - z*dx");
  auto rep = check_engel_pair({a, b}, plan);
  v.require(rep.pass, "standard pair fails");
  double rel = std::min(rep.check("alpha^beta^dalpha").relative_min, rep.check("beta^dbeta").relative_min);
  v.require(rel >= 0.5, "relative witness below 0.5");
  auto sw = check_engel_pair({b, a}, plan);
  const auto& c1 = sw.check("alpha^beta^dalpha");
  v.require(!c1.pass, "swapped pair passes condition (1)");
  v.require(c1.max <= 1e-12, "swapped witness above 1e-12");
  Distribution2 d(VectorField::parse(c, {"0", "0", "0", "1"}), VectorField::parse(c, {"1", "z", "w", "0"}));
  auto fr = check_engel_frame(d, plan);
  v.require(fr.pass, "kernel frame fails");
  v.require(all_equal(fr.check("rank D2").ranks, 3) && all_equal(fr.check("rank D3").ranks, 4),
            "ranks not exactly 3 and 4");
  v.note << "min relative witness " << rel << ", swapped max " << c1.max << ", samples " << rep.sample_count;
  return v;
}

// ---------------------------------------------------------------- 2

Verdict characteristic() {
  Verdict v;
  auto c = box({"x", "y", "z", "w"});
  SamplePlan plan{{5}, 200, 0};
  KForm beta = KForm::parse_one_form(c, "dy - z*dx");
  KForm vol = KForm::monomial(c, ScalarExpr::constant(1), {"x", "y", "z", "w"});
  VectorField x0 = characteristic_vector_field(beta, vol, plan);
  const double want[] = {0, 0, 0, 1};
  for (std::size_t i = 0; i < 4; ++i)
    v.require(x0[i].is_constant(want[i]), "component " + std::to_string(i) + " is " + x0[i].to_string());
  auto rep = check_characteristic(x0, beta, plan);
  double res = std::max(rep.check("(L_X0 beta)^beta").max, rep.check("beta(X0)").max);
  v.require(rep.pass && res <= 1e-12, "characteristic residual");
  v.note << "X0 = (" << x0[0].to_string() << ", " << x0[1].to_string() << ", " << x0[2].to_string() << ", "
         << x0[3].to_string() << "), residual " << res;
  return v;
}

// ---------------------------------------------------------------- 3, 4

Verdict prolongation_twisting() {
  Verdict v;
  SamplePlan plan{{4}, 16, 0};
  double worst_fit = 0.0, worst_slope = 0.0;
  for (const auto& f : {standard_frame(), torus_frame()}) {
    auto base = random_points(*f.chart(), 10, 0);
    for (int n = 1; n <= 5; ++n) {
      std::string tag = " (n=" + std::to_string(n) + ")";
      auto pe = prolong(f, n, plan);
      v.require(check_engel_frame(pe.frame, plan).pass, "not Engel" + tag);
      auto tw = twisting_number(pe.frame, f, base, plan);
      v.require(tw.signed_value == n, "tw = " + std::to_string(tw.signed_value) + tag);
      Development dev(pe.frame, f, "theta", plan);
      for (const auto& p : base) {
        auto tr = dev.trace(p, 0.0, 2 * kPi, 256);
        auto fit = fit_line(tr.t, tr.angle);
        worst_fit = std::max(worst_fit, fit.max_deviation);
        worst_slope = std::max(worst_slope, std::abs(fit.slope - n / 2.0));
      }
    }
  }
  v.require(worst_fit <= 1e-8, "fit residual above 1e-8");
  v.require(worst_slope <= 1e-8, "slope differs from n/2");
  v.note << "max fit residual " << worst_fit << ", max |slope - n/2| " << worst_slope;
  return v;
}

Verdict deprolongation() {
  Verdict v;
  SamplePlan plan{{4}, 16, 0};
  double worst = 0.0;
  for (const auto& f : {standard_frame(), torus_frame()}) {
    auto pts = sample_points(*f.chart(), plan);
    for (int n = 1; n <= 5; ++n) {
      auto pe = prolong(f, n, plan);
      for (int k = 0; k < 8; ++k) {
        double section = 0.3 + 2 * kPi * k / 8;
        worst = std::max(worst, max_kernel_angle(deprolong(pe.frame, "theta", section, plan), f, pts));
      }
    }
  }
  v.require(worst <= 1e-9, "principal angle above 1e-9");
  v.note << "max principal angle " << worst;
  return v;
}

// ---------------------------------------------------------------- 5

Verdict extension() {
  Verdict v;
  SamplePlan plan{{4}, 16, 0};
  auto f = standard_frame();
  double worst_line = 0.0, worst_id = 0.0, min_g = INFINITY, max_g = -INFINITY;
  for (const auto& fol : kFoliations) {
    for (int n = 0; n <= 3; ++n) {
      std::string tag = std::string(" (") + fol.a + ", n=" + std::to_string(n) + ")";
      auto s = spec(f, fol, n);
      auto ext = extend(s, plan);
      min_g = std::min(min_g, ext.angle.min);
      max_g = std::max(max_g, ext.angle.max);
      v.require(ext.angle.min > 0 && ext.angle.min < kPi, "min g outside (0, pi)" + tag);
      v.require(check_engel_frame(ext.frame, plan).pass, "not Engel" + tag);
      LegendrianLineField f0{f, ScalarExpr::constant(1), ScalarExpr::constant(0)};
      LegendrianLineField f1{f, s.a, s.b};
      worst_line = std::max(worst_line, line_angle_distance(induced_legendrian_line(ext.frame, f, 0.0, plan), f0, plan));
      worst_line = std::max(worst_line, line_angle_distance(induced_legendrian_line(ext.frame, f, 1.0, plan), f1, plan));
      int mtw = minimal_twisting_number(ext.frame, f, plan).value;
      v.require(mtw == n, "mtw = " + std::to_string(mtw) + tag);
      auto ids = verify_extension_identities(ext, plan);
      for (const auto& c : ids.checks) worst_id = std::max(worst_id, c.max);
      v.require(ids.pass, "identities" + tag);
    }
  }
  v.require(worst_line <= 1e-9, "end foliation distance above 1e-9");
  v.require(worst_id <= 1e-9, "identity residual above 1e-9");
  v.note << "g range [" << min_g << ", " << max_g << "], max line distance " << worst_line
         << ", max identity residual " << worst_id;
  return v;
}

// ---------------------------------------------------------------- 6, 7

struct FixtureFrame {
  std::string name;
  Distribution2 d;
};

std::vector<FixtureFrame> fixture_frames() {
  SamplePlan plan{{4}, 16, 0};
  std::vector<FixtureFrame> out;
  auto r4 = box({"x", "y", "z", "w"});
  out.push_back({"standard-engel-r4", {VectorField::parse(r4, {"0", "0", "0", "1"}),
                                       VectorField::parse(r4, {"1", "z", "w", "0"})}});
  auto s = standard_frame();
  auto t = torus_frame();
  out.push_back({"standard-contact-r3", {s.v0(), s.v1()}});
  out.push_back({"t3-contact", {t.v0(), t.v1()}});
  for (int n = 1; n <= 5; ++n) {
    out.push_back({"prolonged-r3-n" + std::to_string(n), prolong(s, n, plan).frame});
    out.push_back({"prolonged-t3-n" + std::to_string(n), prolong(t, n, plan).frame});
  }
  int k = 0;
  for (const auto& fol : kFoliations) {
    ++k;
    for (int n = 0; n <= 3; ++n)
      out.push_back({"extension-g" + std::to_string(k) + "-n" + std::to_string(n), extend(spec(s, fol, n), plan).frame});
  }
  return out;
}

double bracket_error(const Distribution2& d, const VectorField& exact, const std::vector<Point>& pts, double h) {
  CompiledExprs c = exact.compile();
  double worst = 0.0;
  for (const auto& p : pts) {
    auto e = c.evaluate(p);
    auto fd = fd_lie_bracket(d.x, d.y, p, h);
    for (std::size_t i = 0; i < e.size(); ++i) worst = std::max(worst, std::abs(e[i] - fd[i]));
  }
  return worst;
}

Verdict oracle(const std::vector<FixtureFrame>& frames) {
  Verdict v;
  double worst = 0.0, rmin = INFINITY, rmax = -INFINITY;
  std::string worst_name;
  for (const auto& f : frames) {
    auto pts = random_points(*f.d.chart(), 100, 0);
    VectorField exact = lie_bracket(f.d.x, f.d.y);
    double e1 = bracket_error(f.d, exact, pts, 1e-3);
    double e2 = bracket_error(f.d, exact, pts, 5e-4);
    if (e1 > worst) {
      worst = e1;
      worst_name = f.name;
    }
    v.require(e1 <= 1e-5, f.name + " error " + std::to_string(e1));
    // polynomial frames of degree <= 2 differentiate exactly; only rounding is left
    if (e1 > 1e-9) {
      double r = e1 / e2;
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
      v.require(r >= 3.5 && r <= 4.5, f.name + " halving ratio " + std::to_string(r));
    }
  }
  v.note << "max error " << worst << " (" << worst_name << "), halving ratio in [" << rmin
         << ", " << rmax << "] over " << frames.size() << " frames";
  return v;
}

double max_coeff(const KForm& w, const std::vector<Point>& pts) {
  auto dense = w.dense();
  CompiledExprs c(dense, w.chart()->names());
  double m = 0.0;
  for (const auto& p : pts) m = std::max(m, max_abs(c.evaluate(p)));
  return m;
}

double max_field(const VectorField& x, const std::vector<Point>& pts) {
  CompiledExprs c = x.compile();
  double m = 0.0;
  for (const auto& p : pts) m = std::max(m, max_abs(c.evaluate(p)));
  return m;
}

Verdict calculus_laws(const std::vector<FixtureFrame>& frames) {
  Verdict v;
  SamplePlan plan{{4}, 16, 0};
  double dd = 0.0, jac = 0.0, anti = 0.0, cartan = 0.0, leib = 0.0;
  for (const auto& f : frames) {
    const ChartPtr& c = f.d.chart();
    auto pts = sample_points(*c, plan);
    std::vector<ScalarExpr> zc, wc;
    for (std::size_t i = 0; i < c->dim(); ++i) {
      auto xi = ScalarExpr::variable(c->names()[i]);
      auto xj = ScalarExpr::variable(c->names()[(i + 1) % c->dim()]);
      zc.push_back(xi * cos(xj));
      wc.push_back(sin(xi) + xj * xj);
    }
    VectorField x = f.d.x, y = f.d.y, z(c, zc);
    VectorField j = lie_bracket(x, lie_bracket(y, z)) + lie_bracket(y, lie_bracket(z, x)) +
                    lie_bracket(z, lie_bracket(x, y));
    jac = std::max(jac, max_field(j, pts));

    KForm a = KForm::one_form(c, wc);
    KForm b = KForm::one_form(c, x.components());  // metric dual of X
    KForm da = exterior_derivative(a);
    dd = std::max(dd, max_coeff(exterior_derivative(da), pts));
    dd = std::max(dd, max_coeff(exterior_derivative(exterior_derivative(b)), pts));
    // one-forms anticommute; a 2-form commutes with a 1-form
    anti = std::max(anti, max_coeff(wedge(a, b) + wedge(b, a), pts));
    anti = std::max(anti, max_coeff(wedge(da, b) - wedge(b, da), pts));
    // L_X = i_X d + d i_X on forms, and L_X is a derivation of the wedge product
    for (const KForm& w : {a, b, da}) {
      KForm cart = interior_product(y, exterior_derivative(w)) + exterior_derivative(interior_product(y, w));
      cartan = std::max(cartan, max_coeff(lie_derivative_form(y, w) - cart, pts));
    }
    KForm lhs = lie_derivative_form(x, wedge(a, b));
    KForm rhs = wedge(lie_derivative_form(x, a), b) + wedge(a, lie_derivative_form(x, b));
    leib = std::max(leib, max_coeff(lhs - rhs, pts));
  }
  v.require(dd <= 1e-10, "d o d");
  v.require(jac <= 1e-10, "Jacobi");
  v.require(anti <= 1e-10, "graded antisymmetry");
  v.require(cartan <= 1e-10, "Cartan formula");
  v.require(leib <= 1e-10, "Leibniz rule");
  v.note << "dd " << dd << ", Jacobi " << jac << ", antisymmetry " << anti << ", Cartan " << cartan << ", Leibniz "
         << leib;
  return v;
}

// ---------------------------------------------------------------- 8

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun cli(const std::string& manifest) {
  std::string cmd = std::string("\"") + ENGEL_CLI + "\" run \"" + manifest + "\" --seed 0 --format json 2>/dev/null";
  CliRun r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string strip_duration(const std::string& s) {
  return std::regex_replace(s, std::regex("\"duration_ms\": [0-9.e+-]+"), "\"duration_ms\": 0");
}

Verdict determinism() {
  Verdict v;
  namespace fs = std::filesystem;
  std::vector<fs::path> good, bad;
  for (const auto& e : fs::directory_iterator(ENGEL_FIXTURE_DIR))
    if (e.path().extension() == ".engel") good.push_back(e.path());
  for (const auto& e : fs::directory_iterator(fs::path(ENGEL_FIXTURE_DIR) / "negative"))
    if (e.path().extension() == ".engel") bad.push_back(e.path());
  std::sort(good.begin(), good.end());
  std::sort(bad.begin(), bad.end());
  v.require(good.size() >= 12 && bad.size() >= 3, "bundled fixtures missing");
  for (const auto& p : good) {
    auto a = cli(p.string());
    auto b = cli(p.string());
    v.require(a.status == 0, p.filename().string() + " exit " + std::to_string(a.status));
    v.require(!a.out.empty() && strip_duration(a.out) == strip_duration(b.out),
              p.filename().string() + " reports differ");
  }
  for (const auto& p : bad) {
    auto a = cli(p.string());
    auto b = cli(p.string());
    v.require(a.status != 0 && a.status != -1, p.filename().string() + " exit 0");
    v.require(strip_duration(a.out) == strip_duration(b.out), p.filename().string() + " reports differ");
  }
  v.note << good.size() << " fixtures byte-identical with exit 0, " << bad.size() << " negatives nonzero";
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  auto run = [&](int id, const std::string& title, auto&& fn) {
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    print(id, title, v, failures);
  };
  run(1, "standard structures: ", standard_structures);
  run(2, "characteristic field: ", characteristic);
  run(3, "prolongation twisting: ", prolongation_twisting);
  run(4, "deprolongation round trip: ", deprolongation);
  run(5, "extension: ", extension);
  std::vector<FixtureFrame> frames;
  try {
    frames = fixture_frames();
  } catch (const std::exception& e) {
    std::cout << "fixture frames: " << e.what() << "\n";
  }
  run(6, "bracket oracle: ", [&] { return oracle(frames); });
  run(7, "calculus laws: ", [&] { return calculus_laws(frames); });
  run(8, "CLI determinism: ", determinism);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria pass")) << "\n";
  return failures ? 1 : 0;
}

#include "engel/report.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <variant>

#include "engel/linalg.hpp"

#ifndef ENGEL_VERSION
#define ENGEL_VERSION "0.0.0"
#endif

namespace engel {

namespace {

constexpr double kPi = std::numbers::pi;

std::string kind_name(CheckKind k) {
  switch (k) {
    case CheckKind::NeverVanishing: return "never_vanishing";
    case CheckKind::IdenticallyZero: return "zero";
    case CheckKind::Rank: return "rank";
    case CheckKind::Residual: return "residual";
  }
  return "?";
}

ordered_json check_json(const CheckResult& c) {
  ordered_json j;
  j["name"] = c.name;
  j["kind"] = kind_name(c.kind);
  j["pass"] = c.pass;
  j["min"] = c.min;
  j["max"] = c.max;
  j["scale"] = c.scale;
  if (c.kind == CheckKind::NeverVanishing) j["relative_min"] = c.relative_min;
  if (c.kind == CheckKind::Rank) {
    j["expected_rank"] = c.expected_rank;
    if (!c.ranks.empty()) {
      auto [lo, hi] = std::minmax_element(c.ranks.begin(), c.ranks.end());
      j["rank_range"] = {*lo, *hi};
    }
  }
  if (c.first_failure) j["first_failure"] = *c.first_failure;
  return j;
}

ordered_json report_json(const VerificationReport& r) {
  ordered_json j;
  j["structure"] = r.structure;
  j["sample_count"] = r.sample_count;
  j["pass"] = r.pass;
  j["checks"] = ordered_json::array();
  for (const auto& c : r.checks) j["checks"].push_back(check_json(c));
  if (r.first_failure) j["first_failure"] = {{"check", r.first_failure->check}, {"point", r.first_failure->point}};
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

std::vector<std::string> component_strings(const VectorField& v) {
  std::vector<std::string> out;
  for (const auto& c : v.components()) out.push_back(c.to_string());
  return out;
}

ordered_json frame_json(const Distribution2& d) {
  return {{"chart", d.chart()->names()}, {"x", component_strings(d.x)}, {"y", component_strings(d.y)}};
}

// first failing check, else the never-vanishing margin
std::string summarize(const VerificationReport& r) {
  const CheckResult* worst = nullptr;
  for (const auto& c : r.checks)
    if (!c.pass) {
      worst = &c;
      break;
    }
  std::ostringstream os;
  if (worst) {
    os << "failed " << worst->name;
  } else {
    os << r.checks.size() << " checks";
    for (const auto& c : r.checks)
      if (c.kind == CheckKind::NeverVanishing) {
        os << ", min rel " << c.relative_min;
        break;
      }
  }
  return os.str();
}

struct Runner {
  const Manifest& m;
  SamplePlan plan;
  Tolerances tol;

  SamplePlan on(const Chart& c) const { return plan_for(plan, c); }

  ProlongedEngel prolonged(const ProlongationDecl& p) const { return prolong(p.base, p.n, plan, tol); }

  Extension extended(const ExtensionDecl& x) const { return extend(x.spec, plan, tol); }

  void add_report(TaskRecord& t, const VerificationReport& r, bool& pass, std::string& summary) const {
    t.detail["reports"].push_back(report_json(r));
    pass = pass && r.pass;
    if (summary.empty() || !r.pass) summary = summarize(r);
  }

  std::string verify(TaskRecord& t, const StructureDecl& s) const {
    bool pass = true;
    std::string summary;
    t.detail["reports"] = ordered_json::array();
    std::visit(
        [&](const auto& b) {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, ContactDecl>) {
            if (b.form) add_report(t, check_contact_3d(*b.form, plan, tol), pass, summary);
            if (b.frame) add_report(t, b.frame->validate(plan, tol), pass, summary);
          } else if constexpr (std::is_same_v<T, EvenContactDecl>) {
            add_report(t, check_even_contact(b.form, plan, tol), pass, summary);
          } else if constexpr (std::is_same_v<T, EngelPairDecl>) {
            add_report(t, check_engel_pair(b.pair, plan, tol), pass, summary);
          } else if constexpr (std::is_same_v<T, EngelFrameDecl>) {
            add_report(t, check_engel_frame(b.frame, plan, tol), pass, summary);
          } else if constexpr (std::is_same_v<T, ProlongationDecl>) {
            auto pe = prolonged(b);
            add_report(t, check_engel_frame(pe.frame, on(*pe.frame.chart()), tol), pass, summary);
          } else if constexpr (std::is_same_v<T, ExtensionDecl>) {
            if (b.s_grid.empty()) {
              auto ext = extended(b);
              t.detail["g"] = ext.g.to_string();
              t.detail["g_range"] = {ext.angle.min, ext.angle.max};
              if (!ext.warnings.empty()) t.detail["warnings"] = ext.warnings;
              add_report(t, check_engel_frame(ext.frame, on(*ext.frame.chart()), tol), pass, summary);
            } else {
              family(t, b);
              summary = std::to_string(b.s_grid.size()) + " slices";
            }
          }
        },
        s.body);
    t.detail["summary"] = summary;
    return pass ? "pass" : "fail";
  }

  void family(TaskRecord& t, const ExtensionDecl& x) const {
    std::vector<ExtensionSpec> specs;
    for (std::size_t i = 0; i < x.s_grid.size(); ++i) {
      std::map<std::string, ScalarExpr> sub{{"s", ScalarExpr::constant(x.s_grid[i])}};
      ExtensionSpec sp = x.spec;
      sp.a = simplify(x.spec.a.substitute(sub));
      sp.b = simplify(x.spec.b.substitute(sub));
      if (x.spec.g) sp.g = simplify(x.spec.g->substitute(sub));
      sp.n = x.family_n[i];
      specs.push_back(std::move(sp));
    }
    auto slices = extend_family(specs, x.s_grid, plan, tol);
    ordered_json arr = ordered_json::array();
    for (const auto& sl : slices) {
      ordered_json j;
      j["s"] = sl.s;
      j["n"] = sl.extension.spec.n;
      j["g"] = sl.extension.g.to_string();
      j["mtw"] = sl.mtw.value;
      j["min_angle"] = sl.mtw.min_angle;
      arr.push_back(std::move(j));
    }
    t.detail["slices"] = std::move(arr);
  }

  double bracket_error(const Distribution2& d, double h, const std::vector<Point>& pts) const {
    VectorField b = lie_bracket(d.x, d.y);
    CompiledExprs cb = b.compile();
    double worst = 0.0;
    for (const auto& p : pts) {
      auto exact = cb.evaluate(p);
      auto fd = fd_lie_bracket(d.x, d.y, p, h);
      for (std::size_t i = 0; i < exact.size(); ++i) worst = std::max(worst, std::abs(exact[i] - fd[i]));
    }
    return worst;
  }

  Distribution2 frame_of(const StructureDecl& s) const {
    if (auto* c = std::get_if<ContactDecl>(&s.body)) return {c->frame->v0(), c->frame->v1()};
    if (auto* f = std::get_if<EngelFrameDecl>(&s.body)) return f->frame;
    if (auto* p = std::get_if<ProlongationDecl>(&s.body)) return prolonged(*p).frame;
    return extended(std::get<ExtensionDecl>(s.body)).frame;
  }

  // value is stored in detail["value"]
  void invariant(TaskRecord& t, const TaskDecl& task, const StructureDecl& s) const {
    const std::string& inv = task.invariant;
    t.detail["invariant"] = inv;
    ordered_json& d = t.detail;
    if (inv == "twisting_number") {
      auto pe = prolonged(std::get<ProlongationDecl>(s.body));
      auto pts = random_points(*pe.base.chart(), 10, plan.seed);
      auto tw = twisting_number(pe.frame, pe.base, pts, plan, tol);
      d["value"] = tw.signed_value;
      d["abs_value"] = tw.abs_value;
      d["totals"] = tw.totals;
    } else if (inv == "minimal_twisting_number") {
      const auto& x = std::get<ExtensionDecl>(s.body);
      auto ext = extended(x);
      auto mt = minimal_twisting_number(ext.frame, x.spec.frame, plan, tol);
      d["value"] = mt.value;
      d["min_angle"] = mt.min_angle;
      if (!mt.warnings.empty()) d["warnings"] = mt.warnings;
    } else if (inv == "orientation") {
      auto o = orient_engel_pair(std::get<EngelPairDecl>(s.body).pair, plan, tol);
      d["value"] = o.satisfied_by;
    } else if (inv == "characteristic_field") {
      KForm beta = std::holds_alternative<EvenContactDecl>(s.body) ? std::get<EvenContactDecl>(s.body).form
                                                                    : std::get<EngelPairDecl>(s.body).pair.beta;
      KForm vol = KForm::monomial(m.chart, ScalarExpr::constant(1), m.chart->names());
      VectorField x0 = characteristic_vector_field(beta, vol, plan, tol).simplified();
      std::string v = "(";
      for (std::size_t i = 0; i < x0.dim(); ++i) v += (i ? ", " : "") + x0[i].to_string();
      d["value"] = v + ")";
      auto rep = check_characteristic(x0, beta, plan, tol);
      d["check"] = report_json(rep);
      if (!rep.pass) d["error"] = "characteristic check failed";
    } else if (inv == "deprolongation_angle") {
      auto pe = prolonged(std::get<ProlongationDecl>(s.body));
      auto pts = sample_points(*pe.base.chart(), plan);
      std::vector<double> sections, angles;
      double worst = 0.0;
      for (int k = 0; k < 8; ++k) {
        double th = 2.0 * kPi * k / 8.0;
        double a = max_kernel_angle(deprolong(pe.frame, "theta", th, plan, tol), pe.base, pts);
        sections.push_back(th);
        angles.push_back(a);
        worst = std::max(worst, a);
      }
      d["value"] = worst;
      d["sections"] = sections;
      d["angles"] = angles;
    } else if (inv == "development_slope") {
      auto pe = prolonged(std::get<ProlongationDecl>(s.body));
      Development dev(pe.frame, pe.base, "theta", plan, tol);
      double lo = dev.fiber_start(), len = dev.fiber_length();
      double smin = INFINITY, smax = -INFINITY, sum = 0.0, dev_max = 0.0;
      auto pts = random_points(*pe.base.chart(), 10, plan.seed);
      for (const auto& p : pts) {
        auto tr = dev.trace(p, lo, lo + len, 256);
        auto fit = fit_line(tr.t, tr.angle);
        smin = std::min(smin, fit.slope);
        smax = std::max(smax, fit.slope);
        sum += fit.slope;
        dev_max = std::max(dev_max, fit.max_deviation);
      }
      d["value"] = sum / static_cast<double>(pts.size());
      d["slope_range"] = {smin, smax};
      d["max_fit_deviation"] = dev_max;
    } else if (inv == "bracket_oracle") {
      Distribution2 fr = frame_of(s);
      auto pts = random_points(*fr.chart(), 100, plan.seed);
      double e1 = bracket_error(fr, tol.fd_step, pts);
      double e2 = bracket_error(fr, tol.fd_step / 2, pts);
      d["value"] = e1;
      d["step"] = tol.fd_step;
      d["half_step_error"] = e2;
      d["ratio"] = e2 > 0 ? e1 / e2 : 0.0;
    } else if (inv == "induced_foliation") {
      const auto& x = std::get<ExtensionDecl>(s.body);
      auto ext = extended(x);
      auto l0 = induced_legendrian_line(ext.frame, x.spec.frame, 0.0, plan, tol);
      auto l1 = induced_legendrian_line(ext.frame, x.spec.frame, 1.0, plan, tol);
      LegendrianLineField f0{x.spec.frame, ScalarExpr::constant(1), ScalarExpr::constant(0)};
      LegendrianLineField f1{x.spec.frame, x.spec.a, x.spec.b};
      double d0 = line_angle_distance(l0, f0, plan), d1 = line_angle_distance(l1, f1, plan);
      d["value"] = std::max(d0, d1);
      d["start"] = d0;
      d["end"] = d1;
    }
  }

  std::string judge(TaskRecord& t, const TaskDecl& task) const {
    ordered_json& d = t.detail;
    if (d.contains("error")) return "fail";
    const ordered_json v = d["value"];  // copy: inserting into d invalidates references
    bool ok = true;
    if (task.expect) {
      d["expect"] = *task.expect;
      const std::string& e = *task.expect;
      if (v.is_number_integer()) {
        long want = 0;
        std::istringstream is(e);
        ok = (is >> want) && is.eof() && want == v.get<long>();
      } else if (v.is_number()) {
        char* end = nullptr;
        double want = std::strtod(e.c_str(), &end);
        ok = end && *end == '\0' && std::abs(v.get<double>() - want) <= task.tolerance;
        if (d.contains("max_fit_deviation")) ok = ok && d["max_fit_deviation"].get<double>() <= task.tolerance;
        if (d.contains("slope_range"))
          ok = ok && d["slope_range"][1].get<double>() - d["slope_range"][0].get<double>() <= task.tolerance;
      } else {
        ok = v.is_string() && v.get<std::string>() == e;
      }
    }
    if (task.expect_max) {
      d["expect_max"] = *task.expect_max;
      ok = ok && v.is_number() && v.get<double>() <= *task.expect_max;
    }
    if (!task.expect && !task.expect_max) return "done";
    return ok ? "match" : "mismatch";
  }

  TaskRecord run(const TaskDecl& task) const {
    TaskRecord t{task.name, to_string(task.kind), task.target, "error", ordered_json::object(), std::nullopt};
    const StructureDecl& s = m.structure(task.target);
    try {
      switch (task.kind) {
        case TaskKind::Verify:
          t.verdict = verify(t, s);
          break;
        case TaskKind::Invariant:
          invariant(t, task, s);
          t.verdict = judge(t, task);
          break;
        case TaskKind::Construct: {
          Distribution2 fr = frame_of(s);
          auto rep = check_engel_frame(fr, on(*fr.chart()), tol);
          t.detail["frame"] = frame_json(fr);
          t.detail["check"] = report_json(rep);
          t.constructed = fr;
          t.verdict = rep.pass ? "pass" : "fail";
          break;
        }
        case TaskKind::Identities: {
          auto ext = extended(std::get<ExtensionDecl>(s.body));
          auto rep = verify_extension_identities(ext, plan, tol);
          t.detail["check"] = report_json(rep);
          t.verdict = rep.pass ? "pass" : "fail";
          break;
        }
      }
    } catch (const Error& e) {
      t.verdict = "error";
      t.detail["error"] = e.what();
    }
    return t;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string text_summary(const TaskRecord& t) {
  const ordered_json& d = t.detail;
  if (d.contains("error")) return d["error"].get<std::string>();
  if (d.contains("value")) {
    const auto& v = d["value"];
    std::string s = d["invariant"].get<std::string>() + " = " +
                    (v.is_string() ? v.get<std::string>() : v.is_number_integer() ? v.dump() : fmt(v.get<double>()));
    if (d.contains("expect")) s += " (expect " + d["expect"].get<std::string>() + ")";
    if (d.contains("expect_max")) s += " (expect <= " + fmt(d["expect_max"].get<double>()) + ")";
    return s;
  }
  if (d.contains("summary")) return d["summary"].get<std::string>();
  if (d.contains("check")) return d["check"]["pass"].get<bool>() ? "all checks pass" : "check failed";
  return "";
}

}  // namespace

bool Report::ok() const {
  for (const auto& t : tasks)
    if (!t.ok()) return false;
  return true;
}

std::string manifest_digest(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Report run_tasks(const Manifest& manifest, const std::set<TaskKind>& kinds) {
  auto t0 = std::chrono::steady_clock::now();
  Report r;
  r.version = ENGEL_VERSION;
  r.manifest_digest = manifest_digest(manifest.text);
  Runner runner{manifest, manifest.plan, manifest.tol};
  for (const auto& task : manifest.tasks)
    if (kinds.empty() || kinds.contains(task.kind)) r.tasks.push_back(runner.run(task));
  r.duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::string emit_report(const Report& report, ReportFormat format) {
  if (format == ReportFormat::Json) {
    ordered_json j;
    j["version"] = report.version;
    j["manifest_digest"] = report.manifest_digest;
    j["tasks"] = ordered_json::array();
    for (const auto& t : report.tasks) {
      ordered_json tj;
      tj["id"] = t.id;
      tj["kind"] = t.kind;
      tj["target"] = t.target;
      tj["verdict"] = t.verdict;
      for (const auto& [k, v] : t.detail.items()) tj[k] = v;
      j["tasks"].push_back(std::move(tj));
    }
    j["duration_ms"] = std::round(report.duration_ms);
    return j.dump(2) + "\n";
  }
  std::ostringstream os;
  os << "engel " << report.version << "  manifest sha256:" << report.manifest_digest << "\n";
  char line[512];
  std::snprintf(line, sizeof line, "%-24s %-10s %-16s %-9s %s\n", "task", "kind", "target", "verdict", "witness");
  os << line;
  int failed = 0;
  for (const auto& t : report.tasks) {
    if (!t.ok()) ++failed;
    std::snprintf(line, sizeof line, "%-24s %-10s %-16s %-9s %s\n", t.id.c_str(), t.kind.c_str(), t.target.c_str(),
                  t.verdict.c_str(), text_summary(t).c_str());
    os << line;
  }
  os << report.tasks.size() << " tasks, " << failed << " not passing, " << std::llround(report.duration_ms)
     << " ms\n";
  return os.str();
}

int exit_code(const Report& report) { return report.ok() ? 0 : 1; }

}  // namespace engel

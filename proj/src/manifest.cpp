#include "engel/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <set>
#include <sstream>

namespace engel {

namespace {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line;
};

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// commas at parenthesis depth zero
std::vector<std::string> split_top(const std::string& s, std::size_t line) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')' && --depth < 0) throw ManifestError(line, "unbalanced ')' in '" + s + "'");
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (depth != 0) throw ManifestError(line, "unbalanced '(' in '" + s + "'");
  out.push_back(trim(cur));
  for (const auto& p : out)
    if (p.empty()) throw ManifestError(line, "empty item in list '" + s + "'");
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  try {
    return evaluate(parse_scalar_expr(s, {}), {});
  } catch (const Error& e) {
    throw ManifestError(line, "bad number '" + s + "': " + e.what());
  }
}

long parse_int(const std::string& s, std::size_t line) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ManifestError(line, "expected an integer, got '" + s + "'");
  return v;
}

// shortest text that reads back to the same double
std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

const std::set<std::string> kKinds{"contact", "even_contact", "engel_pair", "engel_frame", "prolongation", "extension"};

const std::map<std::string, std::set<std::string>> kInvariants{
    {"twisting_number", {"prolongation"}},
    {"minimal_twisting_number", {"extension"}},
    {"orientation", {"engel_pair"}},
    {"characteristic_field", {"even_contact", "engel_pair"}},
    {"deprolongation_angle", {"prolongation"}},
    {"development_slope", {"prolongation"}},
    {"bracket_oracle", {"contact", "engel_frame", "prolongation", "extension"}},
    {"induced_foliation", {"extension"}},
};

class Parser {
public:
  explicit Parser(const std::string& text) { m_.text = text; }

  Manifest run() {
    std::istringstream in(m_.text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
      ++line;
      auto hash = raw.find('#');
      std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw ManifestError(line, "unterminated section header");
        close_section();
        open_section(trim(s.substr(1, s.size() - 2)), line);
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos) throw ManifestError(line, "expected 'key = value'");
      Entry e{trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
      if (e.key.empty() || e.value.empty()) throw ManifestError(line, "empty key or value");
      if (section_.empty()) throw ManifestError(line, "entry outside of any section");
      take(e);
    }
    close_section();
    if (!m_.chart) throw ManifestError(line, "manifest has no [chart] section");
    return std::move(m_);
  }

private:
  void open_section(const std::string& header, std::size_t line) {
    auto sp = header.find_first_of(" \t");
    section_ = header.substr(0, sp);
    arg_ = sp == std::string::npos ? "" : trim(header.substr(sp));
    section_line_ = line;
    entries_.clear();
    static const std::set<std::string> plain{"chart", "sampling", "tolerances", "expressions", "fields", "forms"};
    if (plain.contains(section_)) {
      if (!arg_.empty()) throw ManifestError(line, "section [" + section_ + "] takes no name");
    } else if (section_ == "structure" || section_ == "task") {
      if (arg_.empty()) throw ManifestError(line, "section [" + section_ + "] needs a name");
    } else {
      throw ManifestError(line, "unknown section [" + section_ + "]");
    }
    if (section_ == "chart" && m_.chart) throw ManifestError(line, "second [chart] section");
    if (section_ != "chart" && section_ != "sampling" && section_ != "tolerances" && !m_.chart)
      throw ManifestError(line, "[" + section_ + "] before [chart]");
  }

  void take(const Entry& e) {
    if (section_ == "sampling") return sampling(e);
    if (section_ == "tolerances") return tolerance(e);
    if (section_ == "expressions") return expression(e);
    if (section_ == "fields") return field(e);
    if (section_ == "forms") return form(e);
    for (const auto& prev : entries_)
      if (prev.key == e.key) throw ManifestError(e.line, "duplicate key '" + e.key + "'");
    entries_.push_back(e);
  }

  void close_section() {
    if (section_ == "chart") chart();
    if (section_ == "structure") structure();
    if (section_ == "task") task();
    section_.clear();
  }

  void chart() {
    std::vector<Coordinate> coords;
    for (const auto& e : entries_) {
      auto open = e.value.find('(');
      if (open == std::string::npos || e.value.back() != ')')
        throw ManifestError(e.line, "expected interval(lo, hi) or circle(period[, lo])");
      std::string fn = trim(e.value.substr(0, open));
      auto args = split_top(e.value.substr(open + 1, e.value.size() - open - 2), e.line);
      if (fn == "interval" && args.size() == 2) {
        coords.push_back(Coordinate::interval(e.key, parse_number(args[0], e.line), parse_number(args[1], e.line)));
      } else if (fn == "circle" && (args.size() == 1 || args.size() == 2)) {
        double lo = args.size() == 2 ? parse_number(args[1], e.line) : 0.0;
        double period = parse_number(args[0], e.line);
        if (!(period > 0.0)) throw ManifestError(e.line, "periodic coordinate '" + e.key + "' needs a positive period");
        coords.push_back(Coordinate::circle(e.key, period, lo));
      } else {
        throw ManifestError(e.line, "expected interval(lo, hi) or circle(period[, lo])");
      }
    }
    try {
      m_.chart = make_chart(std::move(coords));
    } catch (const Error& err) {
      throw ManifestError(entries_.empty() ? section_line_ : entries_.back().line, err.what());
    }
  }

  void sampling(const Entry& e) {
    if (e.key == "grid") {
      m_.plan.grid.clear();
      for (const auto& s : split_top(e.value, e.line)) {
        long r = parse_int(s, e.line);
        if (r < 2) throw ManifestError(e.line, "grid resolution must be at least 2");
        m_.plan.grid.push_back(static_cast<int>(r));
      }
    } else if (e.key == "random") {
      long r = parse_int(e.value, e.line);
      if (r < 0) throw ManifestError(e.line, "random count must be non-negative");
      m_.plan.random = static_cast<int>(r);
    } else if (e.key == "seed") {
      long r = parse_int(e.value, e.line);
      if (r < 0) throw ManifestError(e.line, "seed must be non-negative");
      m_.plan.seed = static_cast<std::uint64_t>(r);
    } else {
      throw ManifestError(e.line, "unknown sampling key '" + e.key + "'");
    }
  }

  void tolerance(const Entry& e) {
    static const std::map<std::string, double Tolerances::*> keys{
        {"rank", &Tolerances::rank},     {"nv", &Tolerances::nv},         {"zero", &Tolerances::zero},
        {"nonzero", &Tolerances::nonzero}, {"proj", &Tolerances::proj}, {"period", &Tolerances::period},
        {"fd_step", &Tolerances::fd_step}};
    auto it = keys.find(e.key);
    if (it == keys.end()) throw ManifestError(e.line, "unknown tolerance '" + e.key + "'");
    double v = parse_number(e.value, e.line);
    if (!(v > 0.0)) throw ManifestError(e.line, "tolerance '" + e.key + "' must be positive");
    m_.tol.*(it->second) = v;
  }

  void fresh_name(const std::string& name, std::size_t line) {
    if (m_.chart->index_of(name) || name == "pi" || !defined_.insert(name).second)
      throw ManifestError(line, "name '" + name + "' is already defined");
  }

  ScalarExpr scalar(const std::string& text, std::size_t line, const std::set<std::string>& extra = {}) {
    std::set<std::string> allowed = m_.chart->name_set();
    allowed.insert(extra.begin(), extra.end());
    for (const auto& [n, _] : m_.expressions) allowed.insert(n);
    try {
      return parse_scalar_expr(text, allowed).substitute(m_.expressions);
    } catch (const UnknownIdentifier& err) {
      throw ManifestError(line, "undefined name '" + err.name() + "'");
    } catch (const Error& err) {
      throw ManifestError(line, err.what());
    }
  }

  void expression(const Entry& e) {
    ScalarExpr v = scalar(e.value, e.line);
    fresh_name(e.key, e.line);
    m_.expressions.emplace(e.key, v);
  }

  void field(const Entry& e) {
    if (e.value.front() != '(' || e.value.back() != ')')
      throw ManifestError(e.line, "field components go in parentheses");
    auto parts = split_top(e.value.substr(1, e.value.size() - 2), e.line);
    if (parts.size() != m_.chart->dim())
      throw ManifestError(e.line, "field '" + e.key + "' has " + std::to_string(parts.size()) +
                                      " components on a " + std::to_string(m_.chart->dim()) + "-dimensional chart");
    std::vector<ScalarExpr> comps;
    for (const auto& p : parts) comps.push_back(scalar(p, e.line));
    fresh_name(e.key, e.line);
    m_.fields.emplace(e.key, VectorField(m_.chart, comps));
  }

  void form(const Entry& e) {
    std::set<std::string> diffs;
    for (const auto& n : m_.chart->names()) diffs.insert("d" + n);
    ScalarExpr text = scalar(e.value, e.line, diffs);
    KForm w(m_.chart, 1);
    try {
      w = KForm::parse_one_form(m_.chart, text.to_string());
    } catch (const Error& err) {
      throw ManifestError(e.line, err.what());
    }
    fresh_name(e.key, e.line);
    m_.forms.emplace(e.key, w);
  }

  const Entry* find(const std::string& key) const {
    for (const auto& e : entries_)
      if (e.key == key) return &e;
    return nullptr;
  }

  const Entry& need(const std::string& key) const {
    if (auto* e = find(key)) return *e;
    throw ManifestError(section_line_, "[" + section_ + " " + arg_ + "] is missing '" + key + "'");
  }

  void only(const std::set<std::string>& keys) const {
    for (const auto& e : entries_)
      if (!keys.contains(e.key)) throw ManifestError(e.line, "unexpected key '" + e.key + "' for this kind");
  }

  const VectorField& field_ref(const std::string& name, std::size_t line) const {
    auto it = m_.fields.find(name);
    if (it == m_.fields.end()) throw ManifestError(line, "undefined field '" + name + "'");
    return it->second;
  }

  const KForm& form_ref(const std::string& name, std::size_t line) const {
    auto it = m_.forms.find(name);
    if (it == m_.forms.end()) throw ManifestError(line, "undefined form '" + name + "'");
    return it->second;
  }

  std::pair<VectorField, VectorField> frame_ref(const Entry& e) const {
    auto names = split_top(e.value, e.line);
    if (names.size() != 2) throw ManifestError(e.line, "a frame lists exactly two fields");
    return {field_ref(names[0], e.line), field_ref(names[1], e.line)};
  }

  void need_dim(std::size_t d) const {
    if (m_.chart->dim() != d)
      throw ManifestError(section_line_, "kind '" + need("kind").value + "' needs a " + std::to_string(d) +
                                             "-dimensional chart, got " + std::to_string(m_.chart->dim()));
  }

  void structure() {
    const Entry& k = need("kind");
    if (!kKinds.contains(k.value)) throw ManifestError(k.line, "unknown structure kind '" + k.value + "'");
    for (const auto& s : m_.structures)
      if (s.name == arg_) throw ManifestError(section_line_, "structure '" + arg_ + "' is already defined");
    StructureDecl decl{arg_, k.value, section_line_, ContactDecl{}};
    try {
      decl.body = structure_body(k.value);
    } catch (const ManifestError&) {
      throw;
    } catch (const Error& err) {
      throw ManifestError(section_line_, err.what());
    }
    m_.structures.push_back(std::move(decl));
  }

  StructureBody structure_body(const std::string& kind) {
    if (kind == "contact") {
      need_dim(3);
      only({"kind", "form", "frame"});
      ContactDecl c;
      if (auto* e = find("form")) c.form = form_ref(e->value, e->line);
      if (auto* e = find("frame")) {
        auto [a, b] = frame_ref(*e);
        c.frame = ContactFrame(a, b);
      }
      if (!c.form && !c.frame) throw ManifestError(section_line_, "contact structure needs 'form' or 'frame'");
      return c;
    }
    if (kind == "even_contact") {
      need_dim(4);
      only({"kind", "form"});
      const Entry& e = need("form");
      return EvenContactDecl{form_ref(e.value, e.line)};
    }
    if (kind == "engel_pair") {
      need_dim(4);
      only({"kind", "alpha", "beta"});
      const Entry& a = need("alpha");
      const Entry& b = need("beta");
      return EngelPairDecl{{form_ref(a.value, a.line), form_ref(b.value, b.line)}};
    }
    if (kind == "engel_frame") {
      need_dim(4);
      only({"kind", "frame"});
      auto [x, y] = frame_ref(need("frame"));
      return EngelFrameDecl{Distribution2(x, y)};
    }
    if (kind == "prolongation") {
      need_dim(3);
      only({"kind", "frame", "n"});
      auto [v0, v1] = frame_ref(need("frame"));
      const Entry& n = need("n");
      long v = parse_int(n.value, n.line);
      if (v < 1) throw ManifestError(n.line, "prolongation needs n >= 1");
      return ProlongationDecl{ContactFrame(v0, v1), static_cast<int>(v)};
    }
    need_dim(3);
    only({"kind", "frame", "a", "b", "n", "g", "s_grid"});
    auto [v0, v1] = frame_ref(need("frame"));
    ExtensionDecl x{{ContactFrame(v0, v1), {}, {}, 0, std::nullopt}, {}, {}};
    std::set<std::string> param;
    if (auto* e = find("s_grid")) {
      for (const auto& s : split_top(e->value, e->line)) x.s_grid.push_back(parse_number(s, e->line));
      param.insert("s");
    }
    const Entry& a = need("a");
    const Entry& b = need("b");
    x.spec.a = scalar(a.value, a.line, param);
    x.spec.b = scalar(b.value, b.line, param);
    if (auto* e = find("g")) x.spec.g = scalar(e->value, e->line, param);
    const Entry& n = need("n");
    for (const auto& s : split_top(n.value, n.line)) {
      long v = parse_int(s, n.line);
      if (v < 0) throw ManifestError(n.line, "extension needs n >= 0");
      x.family_n.push_back(static_cast<int>(v));
    }
    if (x.s_grid.empty()) {
      if (x.family_n.size() != 1) throw ManifestError(n.line, "a single extension takes one n");
      x.spec.n = x.family_n.front();
      x.family_n.clear();
    } else if (x.family_n.size() != x.s_grid.size()) {
      throw ManifestError(n.line, "n lists " + std::to_string(x.family_n.size()) + " values for " +
                                      std::to_string(x.s_grid.size()) + " grid points");
    }
    return x;
  }

  void task() {
    only({"kind", "target", "invariant", "expect", "expect_max", "tolerance"});
    for (const auto& t : m_.tasks)
      if (t.name == arg_) throw ManifestError(section_line_, "task '" + arg_ + "' is already defined");
    TaskDecl t;
    t.name = arg_;
    t.line = section_line_;
    const Entry& k = need("kind");
    static const std::map<std::string, TaskKind> kinds{{"verify", TaskKind::Verify},
                                                       {"invariant", TaskKind::Invariant},
                                                       {"construct", TaskKind::Construct},
                                                       {"identities", TaskKind::Identities}};
    auto it = kinds.find(k.value);
    if (it == kinds.end()) throw ManifestError(k.line, "unknown task kind '" + k.value + "'");
    t.kind = it->second;
    const Entry& target = need("target");
    auto s = std::find_if(m_.structures.begin(), m_.structures.end(),
                          [&](const StructureDecl& d) { return d.name == target.value; });
    if (s == m_.structures.end()) throw ManifestError(target.line, "undefined structure '" + target.value + "'");
    t.target = target.value;
    const std::string& sk = s->kind;
    bool family = sk == "extension" && !std::get<ExtensionDecl>(s->body).s_grid.empty();

    if (t.kind == TaskKind::Invariant) {
      const Entry& inv = need("invariant");
      auto iv = kInvariants.find(inv.value);
      if (iv == kInvariants.end()) throw ManifestError(inv.line, "unknown invariant '" + inv.value + "'");
      if (!iv->second.contains(sk) || family)
        throw ManifestError(inv.line, "invariant '" + inv.value + "' does not apply to a " +
                                          (family ? std::string("extension family") : sk));
      if (inv.value == "bracket_oracle" && sk == "contact" && !std::get<ContactDecl>(s->body).frame)
        throw ManifestError(inv.line, "bracket_oracle needs a contact structure given by a frame");
      t.invariant = inv.value;
    } else if (find("invariant")) {
      throw ManifestError(find("invariant")->line, "'invariant' only applies to invariant tasks");
    }
    if (t.kind == TaskKind::Construct && sk != "prolongation" && sk != "extension")
      throw ManifestError(k.line, "construct needs a prolongation or extension target");
    if (t.kind == TaskKind::Construct && family)
      throw ManifestError(k.line, "construct needs a single extension, not a family");
    if (t.kind == TaskKind::Identities && (sk != "extension" || family))
      throw ManifestError(k.line, "identities needs a single extension target");
    if ((find("expect") || find("expect_max")) && t.kind != TaskKind::Invariant)
      throw ManifestError(section_line_, "expectations only apply to invariant tasks");
    if (auto* e = find("expect")) t.expect = e->value;
    if (auto* e = find("expect_max")) t.expect_max = parse_number(e->value, e->line);
    if (auto* e = find("tolerance")) t.tolerance = parse_number(e->value, e->line);
    m_.tasks.push_back(std::move(t));
  }

  Manifest m_;
  std::set<std::string> defined_;
  std::string section_;
  std::string arg_;
  std::size_t section_line_ = 0;
  std::vector<Entry> entries_;
};

}  // namespace

std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::Verify: return "verify";
    case TaskKind::Invariant: return "invariant";
    case TaskKind::Construct: return "construct";
    case TaskKind::Identities: return "identities";
  }
  return "?";
}

const StructureDecl& Manifest::structure(const std::string& name) const {
  for (const auto& s : structures)
    if (s.name == name) return s;
  throw PreconditionError("no structure named '" + name + "'");
}

Manifest parse_manifest(const std::string& text) { return Parser(text).run(); }

SamplePlan plan_for(const SamplePlan& plan, const Chart& chart) {
  SamplePlan out = plan;
  if (out.grid.size() > 1) {
    out.grid.resize(chart.dim(), out.grid.back());
  }
  return out;
}

std::string frame_manifest(const Distribution2& d, const std::string& name, const SamplePlan& plan,
                           const Tolerances& tol) {
  std::ostringstream os;
  const Chart& c = *d.chart();
  os << "[chart]\n";
  for (const auto& k : c.coords()) {
    if (k.periodic)
      os << k.name << " = circle(" << fmt(k.period) << ", " << fmt(k.lo) << ")\n";
    else
      os << k.name << " = interval(" << fmt(k.lo) << ", " << fmt(k.hi) << ")\n";
  }
  os << "\n[sampling]\ngrid = ";
  for (std::size_t i = 0; i < plan.grid.size(); ++i) os << (i ? ", " : "") << plan.grid[i];
  os << "\nrandom = " << plan.random << "\nseed = " << plan.seed << "\n";
  os << "\n[tolerances]\nrank = " << fmt(tol.rank) << "\nnv = " << fmt(tol.nv) << "\nzero = " << fmt(tol.zero)
     << "\nnonzero = " << fmt(tol.nonzero) << "\nproj = " << fmt(tol.proj) << "\nperiod = " << fmt(tol.period)
     << "\nfd_step = " << fmt(tol.fd_step) << "\n";
  auto comps = [](const VectorField& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.dim(); ++i) s += (i ? ", " : "") + v[i].to_string();
    return s + ")";
  };
  os << "\n[fields]\nX = " << comps(d.x) << "\nY = " << comps(d.y) << "\n";
  os << "\n[structure " << name << "]\nkind = engel_frame\nframe = X, Y\n";
  os << "\n[task verify-" << name << "]\nkind = verify\ntarget = " << name << "\n";
  return os.str();
}

}  // namespace engel

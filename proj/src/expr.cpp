#include "engel/expr.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <numbers>
#include <unordered_map>

#include "engel/error.hpp"

namespace engel {

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

NodePtr make(Op op, double value, int exponent, std::string name, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = value;
  n->exponent = exponent;
  n->name = std::move(name);
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  std::size_t h = static_cast<std::size_t>(op) * 0x100000001b3ULL;
  switch (op) {
    case Op::Constant:
      h = mix(h, std::hash<double>{}(n->value == 0.0 ? 0.0 : n->value));
      break;
    case Op::NamedConstant:
    case Op::Variable:
      h = mix(h, std::hash<std::string>{}(n->name));
      break;
    case Op::IntPower:
      h = mix(h, std::hash<int>{}(n->exponent));
      break;
    default:
      break;
  }
  if (n->lhs) h = mix(h, n->lhs->hash);
  if (n->rhs) h = mix(h, n->rhs->hash);
  n->hash = h;
  return n;
}

bool node_equal(const Node* a, const Node* b) {
  if (a == b) return true;
  if (a->hash != b->hash || a->op != b->op) return false;
  switch (a->op) {
    case Op::Constant:
      return a->value == b->value;
    case Op::NamedConstant:
    case Op::Variable:
      return a->name == b->name;
    case Op::IntPower:
      if (a->exponent != b->exponent) return false;
      break;
    default:
      break;
  }
  if (a->lhs && !node_equal(a->lhs.get(), b->lhs.get())) return false;
  if (a->rhs && !node_equal(a->rhs.get(), b->rhs.get())) return false;
  return true;
}

int node_compare(const Node* a, const Node* b) {
  if (a == b) return 0;
  if (a->op != b->op) return a->op < b->op ? -1 : 1;
  switch (a->op) {
    case Op::Constant:
      if (a->value != b->value) return a->value < b->value ? -1 : 1;
      return 0;
    case Op::NamedConstant:
    case Op::Variable: {
      int c = a->name.compare(b->name);
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case Op::IntPower:
      if (a->exponent != b->exponent) return a->exponent < b->exponent ? -1 : 1;
      break;
    default:
      break;
  }
  if (a->lhs) {
    if (int c = node_compare(a->lhs.get(), b->lhs.get()); c != 0) return c;
  }
  if (a->rhs) {
    if (int c = node_compare(a->rhs.get(), b->rhs.get()); c != 0) return c;
  }
  return 0;
}

double named_constant_value(const std::string& name) {
  if (name == "pi") return std::numbers::pi;
  throw EvalError("unknown named constant '" + name + "'", "");
}

// Binding strength used by the printer: higher binds tighter.
int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Subtract:
      return 1;
    case Op::Multiply:
    case Op::Divide:
      return 2;
    case Op::Negate:
      return 3;
    case Op::IntPower:
      return 4;
    default:
      return 5;
  }
}

void print_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void print(const Node* n, std::string& out) {
  auto child = [&](const Node* c, bool wrap) {
    if (wrap) out.push_back('(');
    print(c, out);
    if (wrap) out.push_back(')');
  };
  switch (n->op) {
    case Op::Constant:
      if (n->value < 0 || std::signbit(n->value)) {
        out += "(-";
        print_number(out, -n->value);
        out += ")";
      } else {
        print_number(out, n->value);
      }
      return;
    case Op::NamedConstant:
    case Op::Variable:
      out += n->name;
      return;
    case Op::Negate:
      out.push_back('-');
      child(n->lhs.get(), precedence(n->lhs->op) < precedence(Op::Negate));
      return;
    case Op::IntPower: {
      bool wrap = precedence(n->lhs->op) < 5 ||
                  (n->lhs->op == Op::Constant && n->lhs->value < 0);
      child(n->lhs.get(), wrap);
      out.push_back('^');
      out += std::to_string(n->exponent);
      return;
    }
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
      out += n->op == Op::Sin ? "sin(" : (n->op == Op::Cos ? "cos(" : "exp(");
      print(n->lhs.get(), out);
      out.push_back(')');
      return;
    case Op::Add:
    case Op::Subtract:
    case Op::Multiply:
    case Op::Divide: {
      int p = precedence(n->op);
      child(n->lhs.get(), precedence(n->lhs->op) < p);
      out += n->op == Op::Add ? " + " : n->op == Op::Subtract ? " - " : n->op == Op::Multiply ? "*" : "/";
      // Left-associative: an equal-precedence right operand needs parentheses.
      child(n->rhs.get(), precedence(n->rhs->op) <= p);
      return;
    }
  }
}

double eval_tree(const Node* n, const VarBinding& b, std::string& path) {
  switch (n->op) {
    case Op::Constant:
      return n->value;
    case Op::NamedConstant:
      return named_constant_value(n->name);
    case Op::Variable: {
      auto it = b.find(n->name);
      if (it == b.end()) throw EvalError("unbound variable '" + n->name + "'", path);
      return it->second;
    }
    default:
      break;
  }
  auto sub = [&](const Node* c, const char* step) {
    std::size_t len = path.size();
    path += step;
    double v = eval_tree(c, b, path);
    path.resize(len);
    return v;
  };
  switch (n->op) {
    case Op::Negate:
      return -sub(n->lhs.get(), "/0");
    case Op::Add:
      return sub(n->lhs.get(), "/0") + sub(n->rhs.get(), "/1");
    case Op::Subtract:
      return sub(n->lhs.get(), "/0") - sub(n->rhs.get(), "/1");
    case Op::Multiply:
      return sub(n->lhs.get(), "/0") * sub(n->rhs.get(), "/1");
    case Op::Divide: {
      double num = sub(n->lhs.get(), "/0");
      double den = sub(n->rhs.get(), "/1");
      if (den == 0.0) throw EvalError("division by zero", path);
      return num / den;
    }
    case Op::IntPower: {
      double base = sub(n->lhs.get(), "/0");
      if (base == 0.0 && n->exponent < 0) throw EvalError("division by zero", path);
      return std::pow(base, n->exponent);
    }
    case Op::Sin:
      return std::sin(sub(n->lhs.get(), "/0"));
    case Op::Cos:
      return std::cos(sub(n->lhs.get(), "/0"));
    case Op::Exp:
      return std::exp(sub(n->lhs.get(), "/0"));
    default:
      return 0.0;
  }
}

}  // namespace

ScalarExpr::ScalarExpr() : node_(make(Op::Constant, 0.0, 0, {}, nullptr, nullptr)) {}
ScalarExpr::ScalarExpr(NodePtr node) : node_(std::move(node)) {}

ScalarExpr ScalarExpr::constant(double v) {
  return ScalarExpr(make(Op::Constant, v == 0.0 ? 0.0 : v, 0, {}, nullptr, nullptr));
}
ScalarExpr ScalarExpr::named_constant(const std::string& name) {
  return ScalarExpr(make(Op::NamedConstant, 0.0, 0, name, nullptr, nullptr));
}
ScalarExpr ScalarExpr::variable(const std::string& name) {
  return ScalarExpr(make(Op::Variable, 0.0, 0, name, nullptr, nullptr));
}
ScalarExpr ScalarExpr::negate(const ScalarExpr& a) {
  return ScalarExpr(make(Op::Negate, 0.0, 0, {}, a.node_, nullptr));
}
ScalarExpr ScalarExpr::add(const ScalarExpr& a, const ScalarExpr& b) {
  return ScalarExpr(make(Op::Add, 0.0, 0, {}, a.node_, b.node_));
}
ScalarExpr ScalarExpr::subtract(const ScalarExpr& a, const ScalarExpr& b) {
  return ScalarExpr(make(Op::Subtract, 0.0, 0, {}, a.node_, b.node_));
}
ScalarExpr ScalarExpr::multiply(const ScalarExpr& a, const ScalarExpr& b) {
  return ScalarExpr(make(Op::Multiply, 0.0, 0, {}, a.node_, b.node_));
}
ScalarExpr ScalarExpr::divide(const ScalarExpr& a, const ScalarExpr& b) {
  return ScalarExpr(make(Op::Divide, 0.0, 0, {}, a.node_, b.node_));
}
ScalarExpr ScalarExpr::int_power(const ScalarExpr& base, int exponent) {
  return ScalarExpr(make(Op::IntPower, 0.0, exponent, {}, base.node_, nullptr));
}
ScalarExpr ScalarExpr::sin(const ScalarExpr& a) {
  return ScalarExpr(make(Op::Sin, 0.0, 0, {}, a.node_, nullptr));
}
ScalarExpr ScalarExpr::cos(const ScalarExpr& a) {
  return ScalarExpr(make(Op::Cos, 0.0, 0, {}, a.node_, nullptr));
}
ScalarExpr ScalarExpr::exp(const ScalarExpr& a) {
  return ScalarExpr(make(Op::Exp, 0.0, 0, {}, a.node_, nullptr));
}

std::set<std::string> ScalarExpr::free_variables() const {
  std::set<std::string> out;
  std::vector<const Node*> stack{node_.get()};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->op == Op::Variable) out.insert(n->name);
    if (n->lhs) stack.push_back(n->lhs.get());
    if (n->rhs) stack.push_back(n->rhs.get());
  }
  return out;
}

ScalarExpr ScalarExpr::substitute(const std::map<std::string, ScalarExpr>& values) const {
  std::unordered_map<const Node*, NodePtr> memo;
  std::function<NodePtr(const NodePtr&)> go = [&](const NodePtr& n) -> NodePtr {
    if (n->op == Op::Variable) {
      auto it = values.find(n->name);
      return it == values.end() ? n : it->second.ptr();
    }
    if (!n->lhs) return n;
    if (auto it = memo.find(n.get()); it != memo.end()) return it->second;
    NodePtr l = go(n->lhs);
    NodePtr r = n->rhs ? go(n->rhs) : nullptr;
    NodePtr out = (l == n->lhs && r == n->rhs)
                      ? n
                      : make(n->op, n->value, n->exponent, n->name, std::move(l), std::move(r));
    memo.emplace(n.get(), out);
    return out;
  };
  return ScalarExpr(go(node_));
}

std::string ScalarExpr::to_string() const {
  std::string out;
  print(node_.get(), out);
  return out;
}

bool operator==(const ScalarExpr& a, const ScalarExpr& b) {
  return node_equal(a.node_.get(), b.node_.get());
}

int compare(const ScalarExpr& a, const ScalarExpr& b) {
  return node_compare(a.ptr().get(), b.ptr().get());
}

ScalarExpr operator-(const ScalarExpr& a) {
  if (a.is_constant()) return ScalarExpr::constant(-a.node().value);
  if (a.op() == Op::Negate) return a.lhs();
  return ScalarExpr::negate(a);
}

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.is_constant() && b.is_constant()) return ScalarExpr::constant(a.node().value + b.node().value);
  if (b.op() == Op::Negate) return a - b.lhs();
  return ScalarExpr::add(a, b);
}

ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b) {
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  if (a.is_constant() && b.is_constant()) return ScalarExpr::constant(a.node().value - b.node().value);
  if (a == b) return ScalarExpr::constant(0.0);
  if (b.op() == Op::Negate) return a + b.lhs();
  return ScalarExpr::subtract(a, b);
}

ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.is_zero() || b.is_zero()) return ScalarExpr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  if (a.is_constant(-1.0)) return -b;
  if (b.is_constant(-1.0)) return -a;
  if (a.is_constant() && b.is_constant()) return ScalarExpr::constant(a.node().value * b.node().value);
  if (a.op() == Op::Negate && b.op() == Op::Negate) return a.lhs() * b.lhs();
  if (a.op() == Op::Negate) return -(a.lhs() * b);
  if (b.op() == Op::Negate) return -(a * b.lhs());
  return ScalarExpr::multiply(a, b);
}

ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b) {
  if (b.is_constant(1.0)) return a;
  if (a.is_zero() && !b.is_zero()) return ScalarExpr::constant(0.0);
  if (a.is_constant() && b.is_constant() && !b.is_zero())
    return ScalarExpr::constant(a.node().value / b.node().value);
  return ScalarExpr::divide(a, b);
}

ScalarExpr operator*(double c, const ScalarExpr& b) { return ScalarExpr::constant(c) * b; }

ScalarExpr pow(const ScalarExpr& base, int exponent) {
  if (exponent == 0) return ScalarExpr::constant(1.0);
  if (exponent == 1) return base;
  if (base.is_constant() && !(base.is_zero() && exponent < 0))
    return ScalarExpr::constant(std::pow(base.node().value, exponent));
  return ScalarExpr::int_power(base, exponent);
}

ScalarExpr sin(const ScalarExpr& a) {
  if (a.is_constant()) return ScalarExpr::constant(std::sin(a.node().value));
  return ScalarExpr::sin(a);
}

ScalarExpr cos(const ScalarExpr& a) {
  if (a.is_constant()) return ScalarExpr::constant(std::cos(a.node().value));
  return ScalarExpr::cos(a);
}

ScalarExpr exp(const ScalarExpr& a) {
  if (a.is_constant()) return ScalarExpr::constant(std::exp(a.node().value));
  return ScalarExpr::exp(a);
}

double evaluate(const ScalarExpr& e, const VarBinding& binding) {
  std::string path;
  return eval_tree(e.ptr().get(), binding, path);
}

ScalarExpr partial_derivative(const ScalarExpr& e, const std::string& var) {
  std::unordered_map<const Node*, ScalarExpr> memo;
  std::function<ScalarExpr(const ScalarExpr&)> d = [&](const ScalarExpr& u) -> ScalarExpr {
    const Node& n = u.node();
    switch (n.op) {
      case Op::Constant:
      case Op::NamedConstant:
        return ScalarExpr::constant(0.0);
      case Op::Variable:
        return ScalarExpr::constant(n.name == var ? 1.0 : 0.0);
      default:
        break;
    }
    if (auto it = memo.find(&n); it != memo.end()) return it->second;
    ScalarExpr a = u.lhs();
    ScalarExpr out;
    switch (n.op) {
      case Op::Negate:
        out = -d(a);
        break;
      case Op::Add:
        out = d(a) + d(u.rhs());
        break;
      case Op::Subtract:
        out = d(a) - d(u.rhs());
        break;
      case Op::Multiply: {
        ScalarExpr b = u.rhs();
        out = d(a) * b + a * d(b);
        break;
      }
      case Op::Divide: {
        ScalarExpr b = u.rhs();
        ScalarExpr da = d(a);
        ScalarExpr db = d(b);
        if (db.is_zero()) {
          out = da / b;
        } else {
          out = (da * b - a * db) / pow(b, 2);
        }
        break;
      }
      case Op::IntPower: {
        int k = n.exponent;
        out = ScalarExpr::constant(k) * pow(a, k - 1) * d(a);
        break;
      }
      case Op::Sin:
        out = cos(a) * d(a);
        break;
      case Op::Cos:
        out = -(sin(a) * d(a));
        break;
      case Op::Exp:
        out = exp(a) * d(a);
        break;
      default:
        break;
    }
    memo.emplace(&n, out);
    return out;
  };
  return d(e);
}

CompiledExprs::CompiledExprs(std::span<const ScalarExpr> exprs, std::span<const std::string> vars) {
  std::unordered_map<std::string, std::uint32_t> var_index;
  for (std::uint32_t i = 0; i < vars.size(); ++i) var_index.emplace(vars[i], i);
  std::unordered_map<const Node*, std::uint32_t> by_ptr;
  std::unordered_map<std::size_t, std::vector<std::pair<const Node*, std::uint32_t>>> by_hash;

  std::function<std::uint32_t(const Node*, std::string&)> emit = [&](const Node* n,
                                                                    std::string& path) {
    if (auto it = by_ptr.find(n); it != by_ptr.end()) return it->second;
    auto& bucket = by_hash[n->hash];
    for (auto& [other, slot] : bucket) {
      if (node_equal(other, n)) {
        by_ptr.emplace(n, slot);
        return slot;
      }
    }
    Instr ins{n->op};
    switch (n->op) {
      case Op::Constant:
        ins.value = n->value;
        break;
      case Op::NamedConstant:
        ins.op = Op::Constant;
        ins.value = named_constant_value(n->name);
        break;
      case Op::Variable: {
        auto it = var_index.find(n->name);
        if (it == var_index.end()) throw EvalError("unbound variable '" + n->name + "'", path);
        ins.a = it->second;
        break;
      }
      default: {
        std::size_t len = path.size();
        path += "/0";
        ins.a = emit(n->lhs.get(), path);
        path.resize(len);
        if (n->rhs) {
          path += "/1";
          ins.b = emit(n->rhs.get(), path);
          path.resize(len);
        }
        ins.exponent = n->exponent;
        if (n->op == Op::Divide || (n->op == Op::IntPower && n->exponent < 0)) {
          ins.path = static_cast<std::uint32_t>(divide_paths_.size());
          divide_paths_.push_back(path);
        }
        break;
      }
    }
    auto slot = static_cast<std::uint32_t>(tape_.size());
    tape_.push_back(ins);
    by_ptr.emplace(n, slot);
    bucket.emplace_back(n, slot);
    return slot;
  };

  for (std::size_t i = 0; i < exprs.size(); ++i) {
    std::string path = "[" + std::to_string(i) + "]";
    outputs_.push_back(emit(exprs[i].ptr().get(), path));
  }
}

void CompiledExprs::evaluate(std::span<const double> point, std::span<double> out) const {
  std::vector<double> regs(tape_.size());
  for (std::size_t i = 0; i < tape_.size(); ++i) {
    const Instr& in = tape_[i];
    double v = 0.0;
    switch (in.op) {
      case Op::Constant:
        v = in.value;
        break;
      case Op::Variable:
        v = point[in.a];
        break;
      case Op::Negate:
        v = -regs[in.a];
        break;
      case Op::Add:
        v = regs[in.a] + regs[in.b];
        break;
      case Op::Subtract:
        v = regs[in.a] - regs[in.b];
        break;
      case Op::Multiply:
        v = regs[in.a] * regs[in.b];
        break;
      case Op::Divide:
        if (regs[in.b] == 0.0) throw EvalError("division by zero", divide_paths_[in.path]);
        v = regs[in.a] / regs[in.b];
        break;
      case Op::IntPower:
        if (in.exponent < 0 && regs[in.a] == 0.0)
          throw EvalError("division by zero", divide_paths_[in.path]);
        v = std::pow(regs[in.a], in.exponent);
        break;
      case Op::Sin:
        v = std::sin(regs[in.a]);
        break;
      case Op::Cos:
        v = std::cos(regs[in.a]);
        break;
      case Op::Exp:
        v = std::exp(regs[in.a]);
        break;
      case Op::NamedConstant:
        break;
    }
    regs[i] = v;
  }
  for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = regs[outputs_[k]];
}

std::vector<double> CompiledExprs::evaluate(std::span<const double> point) const {
  std::vector<double> out(outputs_.size());
  evaluate(point, out);
  return out;
}

}  // namespace engel

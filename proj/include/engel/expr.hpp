#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace engel {

enum class Op : std::uint8_t {
  Constant,
  NamedConstant,
  Variable,
  Negate,
  Add,
  Subtract,
  Multiply,
  Divide,
  IntPower,
  Sin,
  Cos,
  Exp,
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op;
  double value = 0.0;    // Constant
  int exponent = 0;      // IntPower
  std::string name;      // NamedConstant, Variable
  NodePtr lhs;           // unary operand, or left operand
  NodePtr rhs;           // right operand of binaries
  std::size_t hash = 0;  // structural hash, filled at construction
};

/// Immutable scalar expression over named real variables.
///
/// Copies share the underlying tree. Trees are never mutated after
/// construction, so a ScalarExpr can be evaluated from several threads.
class ScalarExpr {
public:
  ScalarExpr();  // Constant(0)
  explicit ScalarExpr(NodePtr node);

  static ScalarExpr constant(double v);
  static ScalarExpr named_constant(const std::string& name);
  static ScalarExpr variable(const std::string& name);

  // Raw constructors: build exactly the requested node, no folding.
  static ScalarExpr negate(const ScalarExpr& a);
  static ScalarExpr add(const ScalarExpr& a, const ScalarExpr& b);
  static ScalarExpr subtract(const ScalarExpr& a, const ScalarExpr& b);
  static ScalarExpr multiply(const ScalarExpr& a, const ScalarExpr& b);
  static ScalarExpr divide(const ScalarExpr& a, const ScalarExpr& b);
  static ScalarExpr int_power(const ScalarExpr& base, int exponent);
  static ScalarExpr sin(const ScalarExpr& a);
  static ScalarExpr cos(const ScalarExpr& a);
  static ScalarExpr exp(const ScalarExpr& a);

  Op op() const noexcept { return node_->op; }
  const Node& node() const noexcept { return *node_; }
  const NodePtr& ptr() const noexcept { return node_; }
  ScalarExpr lhs() const { return ScalarExpr(node_->lhs); }
  ScalarExpr rhs() const { return ScalarExpr(node_->rhs); }

  bool is_constant() const noexcept { return node_->op == Op::Constant; }
  bool is_constant(double v) const noexcept {
    return node_->op == Op::Constant && node_->value == v;
  }
  bool is_zero() const noexcept { return is_constant(0.0); }

  std::set<std::string> free_variables() const;

  /// Replace every occurrence of each variable in `values` by the given expression.
  ScalarExpr substitute(const std::map<std::string, ScalarExpr>& values) const;

  std::string to_string() const;

  friend bool operator==(const ScalarExpr& a, const ScalarExpr& b);
  friend bool operator!=(const ScalarExpr& a, const ScalarExpr& b) { return !(a == b); }

private:
  NodePtr node_;
};

/// Total structural order; used to canonicalize commutative operands.
int compare(const ScalarExpr& a, const ScalarExpr& b);

struct ExprLess {
  bool operator()(const ScalarExpr& a, const ScalarExpr& b) const { return compare(a, b) < 0; }
};

// Folding constructors: apply the trivial 0/1 identities and fold pure
// numeric constants. Used by differentiation and the calculus layer.
ScalarExpr operator-(const ScalarExpr& a);
ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b);
ScalarExpr operator*(double c, const ScalarExpr& b);
ScalarExpr pow(const ScalarExpr& base, int exponent);
ScalarExpr sin(const ScalarExpr& a);
ScalarExpr cos(const ScalarExpr& a);
ScalarExpr exp(const ScalarExpr& a);

using VarBinding = std::map<std::string, double>;

/// Parse an expression. Identifiers must be in `allowed_vars` or be "pi".
ScalarExpr parse_scalar_expr(std::string_view text, const std::set<std::string>& allowed_vars);

ScalarExpr partial_derivative(const ScalarExpr& e, const std::string& var);

double evaluate(const ScalarExpr& e, const VarBinding& binding);

/// Bounded rewrite system run to a fixed point: constant folding, 0/1
/// identities, like-term and like-factor collection over a canonical
/// operand order, and sin(u)^2 + cos(u)^2 -> 1.
ScalarExpr simplify(const ScalarExpr& e);

/// Several expressions compiled against a fixed variable order into one
/// instruction tape with shared common subexpressions.
class CompiledExprs {
public:
  CompiledExprs() = default;
  CompiledExprs(std::span<const ScalarExpr> exprs, std::span<const std::string> vars);

  std::size_t size() const noexcept { return outputs_.size(); }

  /// Evaluate every expression at `point` (ordered like `vars`) into `out`.
  /// Throws EvalError on division by zero.
  void evaluate(std::span<const double> point, std::span<double> out) const;
  std::vector<double> evaluate(std::span<const double> point) const;

private:
  struct Instr {
    Op op;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double value = 0.0;
    int exponent = 0;
    std::uint32_t path = 0;  // index into divide_paths_ for Divide
  };
  std::vector<Instr> tape_;
  std::vector<std::uint32_t> outputs_;
  std::vector<std::string> divide_paths_;
};

}  // namespace engel

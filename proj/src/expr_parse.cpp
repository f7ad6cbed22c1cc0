// Recursive-descent parser for the scalar expression grammar:
//
//   expr     := term (('+' | '-') term)*
//   term     := unary (('*' | '/') unary)*
//   unary    := '-' unary | power
//   power    := primary ('^' exponent)?
//   exponent := ['-'] INTEGER ('^' exponent)?        (right-associative)
//   primary  := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'
//   FUNC     := sin | cos | exp

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "engel/error.hpp"
#include "engel/expr.hpp"

namespace engel {

namespace {

class Parser {
public:
  Parser(std::string_view text, const std::set<std::string>& vars) : text_(text), vars_(vars) {}

  ScalarExpr parse() {
    ScalarExpr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw SyntaxError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
    return e;
  }

private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  ScalarExpr parse_expr() {
    ScalarExpr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = ScalarExpr::add(lhs, parse_term());
      } else if (accept('-')) {
        lhs = ScalarExpr::subtract(lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  ScalarExpr parse_term() {
    ScalarExpr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = ScalarExpr::multiply(lhs, parse_unary());
      } else if (accept('/')) {
        lhs = ScalarExpr::divide(lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  ScalarExpr parse_unary() {
    if (accept('-')) return ScalarExpr::negate(parse_unary());
    return parse_power();
  }

  ScalarExpr parse_power() {
    ScalarExpr base = parse_primary();
    if (accept('^')) return ScalarExpr::int_power(base, parse_exponent());
    return base;
  }

  int parse_exponent() {
    bool negative = accept('-');
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) throw SyntaxError("exponent must be an integer literal", start);
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
      throw SyntaxError("exponent must be an integer literal", start);
    long value = 0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc{} || value > 4096) throw SyntaxError("exponent out of range", start);
    long k = negative ? -value : value;
    if (accept('^')) {
      int rest = parse_exponent();
      if (rest < 0) throw SyntaxError("negative exponent of an exponent is not an integer", start);
      double folded = std::pow(static_cast<double>(k), rest);
      if (std::abs(folded) > 4096) throw SyntaxError("exponent out of range", start);
      k = static_cast<long>(folded);
    }
    return static_cast<int>(k);
  }

  ScalarExpr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      std::size_t digits = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (digits == pos_) pos_ = save;  // "2e" is number 2 followed by identifier e
    }
    double value = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc{} || res.ptr != text_.data() + pos_)
      throw SyntaxError("malformed number", start);
    return ScalarExpr::constant(value);
  }

  ScalarExpr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (c == '(') {
      ++pos_;
      ScalarExpr inner = parse_expr();
      if (!accept(')')) throw SyntaxError("expected ')'", pos_);
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string name(text_.substr(start, pos_ - start));
      if (name == "sin" || name == "cos" || name == "exp") {
        if (!accept('(')) throw SyntaxError("function '" + name + "' requires parentheses", pos_);
        ScalarExpr arg = parse_expr();
        if (!accept(')')) throw SyntaxError("expected ')'", pos_);
        if (name == "sin") return ScalarExpr::sin(arg);
        if (name == "cos") return ScalarExpr::cos(arg);
        return ScalarExpr::exp(arg);
      }
      if (name == "pi") return ScalarExpr::named_constant(name);
      if (!vars_.contains(name)) throw UnknownIdentifier(name, start);
      if (peek() == '(') throw SyntaxError("'" + name + "' is not a function", pos_);
      return ScalarExpr::variable(name);
    }
    throw SyntaxError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  std::string_view text_;
  const std::set<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarExpr parse_scalar_expr(std::string_view text, const std::set<std::string>& allowed_vars) {
  return Parser(text, allowed_vars).parse();
}

}  // namespace engel

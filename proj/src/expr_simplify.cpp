#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>

#include "engel/expr.hpp"

namespace engel {

namespace {

struct Factor {
  ScalarExpr base;
  int exponent;
};

struct Product {
  double coef = 1.0;
  std::vector<Factor> factors;  // sorted by base, merged, no zero exponents
};

int compare_factors(const std::vector<Factor>& a, const std::vector<Factor>& b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare(a[i].base, b[i].base); c != 0) return c;
    if (a[i].exponent != b[i].exponent) return a[i].exponent < b[i].exponent ? -1 : 1;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

void gather_product(const ScalarExpr& e, int power, Product& out) {
  switch (e.op()) {
    case Op::Constant:
      out.coef *= std::pow(e.node().value, power);
      return;
    case Op::Negate:
      if (power % 2 != 0) out.coef = -out.coef;
      gather_product(e.lhs(), power, out);
      return;
    case Op::Multiply:
      gather_product(e.lhs(), power, out);
      gather_product(e.rhs(), power, out);
      return;
    case Op::Divide:
      gather_product(e.lhs(), power, out);
      if (e.rhs().is_zero()) {
        out.factors.push_back({e.rhs(), -power});
      } else {
        gather_product(e.rhs(), -power, out);
      }
      return;
    case Op::IntPower:
      if (e.lhs().is_zero() && e.node().exponent * power < 0) {
        out.factors.push_back({e.lhs(), e.node().exponent * power});
        return;
      }
      gather_product(e.lhs(), power * e.node().exponent, out);
      return;
    default:
      out.factors.push_back({e, power});
      return;
  }
}

Product collect_product(const ScalarExpr& e) {
  Product p;
  gather_product(e, 1, p);
  std::sort(p.factors.begin(), p.factors.end(),
            [](const Factor& a, const Factor& b) { return compare(a.base, b.base) < 0; });
  std::vector<Factor> merged;
  for (auto& f : p.factors) {
    if (!merged.empty() && merged.back().base == f.base) {
      merged.back().exponent += f.exponent;
    } else {
      merged.push_back(f);
    }
  }
  std::erase_if(merged, [](const Factor& f) { return f.exponent == 0; });
  p.factors = std::move(merged);
  return p;
}

ScalarExpr power_of(const Factor& f) {
  int k = std::abs(f.exponent);
  return k == 1 ? f.base : ScalarExpr::int_power(f.base, k);
}

ScalarExpr rebuild_product(const Product& p) {
  if (p.coef == 0.0) return ScalarExpr::constant(0.0);
  if (p.factors.empty()) return ScalarExpr::constant(p.coef);
  double mag = std::abs(p.coef);
  std::optional<ScalarExpr> num;
  std::optional<ScalarExpr> den;
  if (mag != 1.0) num = ScalarExpr::constant(mag);
  for (const auto& f : p.factors) {
    if (f.exponent > 0) {
      num = num ? ScalarExpr::multiply(*num, power_of(f)) : power_of(f);
    } else {
      den = den ? ScalarExpr::multiply(*den, power_of(f)) : power_of(f);
    }
  }
  ScalarExpr out = num ? *num : ScalarExpr::constant(1.0);
  if (den) out = ScalarExpr::divide(out, *den);
  if (p.coef < 0) out = ScalarExpr::negate(out);
  return out;
}

void gather_sum(const ScalarExpr& e, double sign, std::vector<Product>& terms) {
  switch (e.op()) {
    case Op::Add:
      gather_sum(e.lhs(), sign, terms);
      gather_sum(e.rhs(), sign, terms);
      return;
    case Op::Subtract:
      gather_sum(e.lhs(), sign, terms);
      gather_sum(e.rhs(), -sign, terms);
      return;
    case Op::Negate:
      gather_sum(e.lhs(), -sign, terms);
      return;
    default: {
      Product p = collect_product(e);
      p.coef *= sign;
      terms.push_back(std::move(p));
      return;
    }
  }
}

std::vector<Product> merge_terms(std::vector<Product> terms) {
  std::stable_sort(terms.begin(), terms.end(), [](const Product& a, const Product& b) {
    return compare_factors(a.factors, b.factors) < 0;
  });
  std::vector<Product> merged;
  for (auto& t : terms) {
    if (!merged.empty() && compare_factors(merged.back().factors, t.factors) == 0) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(std::move(t));
    }
  }
  std::erase_if(merged, [](const Product& p) { return p.coef == 0.0; });
  return merged;
}

// Finds c*R*sin(u)^2 + c*R*cos(u)^2 and replaces the pair by c*R.
bool apply_pythagorean(std::vector<Product>& terms) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    for (std::size_t k = 0; k < terms[i].factors.size(); ++k) {
      const Factor& f = terms[i].factors[k];
      if (f.base.op() != Op::Sin || f.exponent != 2) continue;
      Product partner{terms[i].coef, terms[i].factors};
      partner.factors[k] = {ScalarExpr::cos(f.base.lhs()), 2};
      std::sort(partner.factors.begin(), partner.factors.end(),
                [](const Factor& a, const Factor& b) { return compare(a.base, b.base) < 0; });
      for (std::size_t j = 0; j < terms.size(); ++j) {
        if (j == i || terms[j].coef != terms[i].coef) continue;
        if (compare_factors(terms[j].factors, partner.factors) != 0) continue;
        Product rest{terms[i].coef, terms[i].factors};
        rest.factors.erase(rest.factors.begin() + static_cast<std::ptrdiff_t>(k));
        terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(std::max(i, j)));
        terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(std::min(i, j)));
        terms.push_back(std::move(rest));
        return true;
      }
    }
  }
  return false;
}

ScalarExpr rebuild_sum(std::vector<Product> terms) {
  terms = merge_terms(std::move(terms));
  while (apply_pythagorean(terms)) terms = merge_terms(std::move(terms));
  if (terms.empty()) return ScalarExpr::constant(0.0);
  // Constant term goes last.
  std::stable_partition(terms.begin(), terms.end(),
                        [](const Product& p) { return !p.factors.empty(); });
  ScalarExpr acc = rebuild_product(terms.front());
  for (std::size_t i = 1; i < terms.size(); ++i) {
    Product mag = terms[i];
    mag.coef = std::abs(mag.coef);
    ScalarExpr t = rebuild_product(mag);
    acc = terms[i].coef > 0 ? ScalarExpr::add(acc, t) : ScalarExpr::subtract(acc, t);
  }
  return acc;
}

class Simplifier {
public:
  ScalarExpr run(const ScalarExpr& e) {
    switch (e.op()) {
      case Op::Constant:
      case Op::NamedConstant:
      case Op::Variable:
        return e;
      default:
        break;
    }
    if (auto it = memo_.find(e.ptr().get()); it != memo_.end()) return it->second;
    ScalarExpr out = step(e);
    memo_.emplace(e.ptr().get(), out);
    return out;
  }

private:
  ScalarExpr step(const ScalarExpr& e) {
    switch (e.op()) {
      case Op::Negate:
      case Op::Add:
      case Op::Subtract: {
        std::vector<Product> terms;
        ScalarExpr l = run(e.lhs());
        if (e.op() == Op::Negate) {
          gather_sum(l, -1.0, terms);
        } else {
          gather_sum(l, 1.0, terms);
          gather_sum(run(e.rhs()), e.op() == Op::Add ? 1.0 : -1.0, terms);
        }
        return rebuild_sum(std::move(terms));
      }
      case Op::Multiply:
      case Op::Divide:
      case Op::IntPower: {
        ScalarExpr l = run(e.lhs());
        ScalarExpr node;
        if (e.op() == Op::IntPower) {
          node = ScalarExpr::int_power(l, e.node().exponent);
        } else {
          ScalarExpr r = run(e.rhs());
          node = e.op() == Op::Multiply ? ScalarExpr::multiply(l, r) : ScalarExpr::divide(l, r);
        }
        return rebuild_product(collect_product(node));
      }
      case Op::Sin:
      case Op::Cos:
      case Op::Exp: {
        ScalarExpr a = run(e.lhs());
        if (a.is_constant()) {
          double v = a.node().value;
          return ScalarExpr::constant(e.op() == Op::Sin   ? std::sin(v)
                                      : e.op() == Op::Cos ? std::cos(v)
                                                          : std::exp(v));
        }
        if (e.op() == Op::Sin && a.op() == Op::Negate)
          return ScalarExpr::negate(ScalarExpr::sin(a.lhs()));
        if (e.op() == Op::Cos && a.op() == Op::Negate) return ScalarExpr::cos(a.lhs());
        if (e.op() == Op::Sin) return ScalarExpr::sin(a);
        if (e.op() == Op::Cos) return ScalarExpr::cos(a);
        return ScalarExpr::exp(a);
      }
      default:
        return e;
    }
  }

  std::unordered_map<const Node*, ScalarExpr> memo_;
};

}  // namespace

ScalarExpr simplify(const ScalarExpr& e) {
  ScalarExpr current = e;
  for (int pass = 0; pass < 32; ++pass) {
    ScalarExpr next = Simplifier{}.run(current);
    if (next == current) return next;
    current = next;
  }
  return current;
}

}  // namespace engel

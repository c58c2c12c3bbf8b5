#pragma once

// Expression DAGs over coordinate variables.
//
// A Tape is a topologically ordered list of nodes; the last node is the
// root. Tapes are built through an ExprBuilder that interns structurally
// identical nodes, so repeated symbolic differentiation and substitution
// stay linear in size. Evaluation is a template over the number type
// (double or Jet<Order>) so derivatives come from forward-mode jets.

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/fields/jet.hpp"

namespace nullift::expr {

enum class Op : std::uint8_t {
  kConst,
  kVar,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kPow,
  kSin,
  kCos,
  kTan,
  kExp,
  kLog,
  kSqrt,
  kAbs,
  kSign,
  kPositive,  // identity that rejects non-positive arguments
};

inline bool is_unary(Op op) {
  switch (op) {
    case Op::kNeg:
    case Op::kSin:
    case Op::kCos:
    case Op::kTan:
    case Op::kExp:
    case Op::kLog:
    case Op::kSqrt:
    case Op::kAbs:
    case Op::kSign:
    case Op::kPositive:
      return true;
    default:
      return false;
  }
}

inline const char* function_name(Op op) {
  switch (op) {
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kTan: return "tan";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSqrt: return "sqrt";
    case Op::kAbs: return "abs";
    case Op::kSign: return "sign";
    case Op::kPositive: return "positive";
    default: return "";
  }
}

struct Node {
  Op op = Op::kConst;
  int a = -1;
  int b = -1;
  int var = -1;
  double value = 0.0;

  bool operator==(const Node& o) const {
    return op == o.op && a == o.a && b == o.b && var == o.var &&
           std::bit_cast<std::uint64_t>(value) == std::bit_cast<std::uint64_t>(o.value);
  }
};

struct NodeHash {
  std::size_t operator()(const Node& n) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint64_t x) {
      h ^= x + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    mix(static_cast<std::uint64_t>(n.op));
    mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.a)));
    mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.b)));
    mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(n.var)));
    mix(std::bit_cast<std::uint64_t>(n.value));
    return static_cast<std::size_t>(h);
  }
};

struct Tape {
  std::vector<Node> nodes;
  int root() const { return static_cast<int>(nodes.size()) - 1; }
};

// ---------------------------------------------------------------------------
// Elementary functions on double and on jets, with domain checks.

namespace detail {

inline bool is_integer(double x) { return std::isfinite(x) && std::floor(x) == x; }

// Value and first three derivatives of x^r at x.
inline std::array<double, 4> power_series(double x, double r) {
  std::array<double, 4> f{};
  double coef = 1.0;
  for (int k = 0; k < 4; ++k) {
    if (coef == 0.0) {
      f[static_cast<std::size_t>(k)] = 0.0;
    } else {
      const double e = r - k;
      if (x == 0.0 && e < 0.0) throw DomainError("power: derivative of x^" + std::to_string(r) + " undefined at 0");
      f[static_cast<std::size_t>(k)] = coef * std::pow(x, e);
    }
    coef *= (r - k);
  }
  return f;
}

template <class T>
constexpr int order_of() {
  if constexpr (std::is_same_v<T, double>) {
    return 0;
  } else {
    return T::kOrder;
  }
}

template <class T>
double value_of(const T& x) {
  if constexpr (std::is_same_v<T, double>) {
    return x;
  } else {
    return x.value();
  }
}

template <class T>
T apply_series(const T& x, const std::array<double, 4>& f) {
  if constexpr (std::is_same_v<T, double>) {
    return f[0];
  } else {
    return compose_series(x, f);
  }
}

template <class T>
T unary(Op op, const T& x) {
  const double v = value_of(x);
  constexpr int order = order_of<T>();
  switch (op) {
    case Op::kNeg:
      return -x;
    case Op::kSin: {
      const double s = std::sin(v), c = std::cos(v);
      return apply_series(x, {s, c, -s, -c});
    }
    case Op::kCos: {
      const double s = std::sin(v), c = std::cos(v);
      return apply_series(x, {c, -s, -c, s});
    }
    case Op::kTan: {
      if (std::cos(v) == 0.0) throw DomainError("tan: pole at " + std::to_string(v));
      const double t = std::tan(v);
      const double s2 = 1.0 + t * t;
      return apply_series(x, {t, s2, 2.0 * t * s2, 2.0 * s2 * (1.0 + 3.0 * t * t)});
    }
    case Op::kExp: {
      const double e = std::exp(v);
      return apply_series(x, {e, e, e, e});
    }
    case Op::kLog: {
      if (!(v > 0.0)) throw DomainError("log: non-positive argument " + std::to_string(v));
      return apply_series(x, {std::log(v), 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)});
    }
    case Op::kSqrt: {
      if (v < 0.0 || std::isnan(v)) throw DomainError("sqrt: negative argument " + std::to_string(v));
      const double s = std::sqrt(v);
      if (order == 0) return apply_series(x, {s, 0, 0, 0});
      if (s == 0.0) throw DomainError("sqrt: derivative undefined at 0");
      return apply_series(x, {s, 0.5 / s, -0.25 / (s * s * s), 0.375 / (s * s * s * s * s)});
    }
    case Op::kAbs: {
      if (order > 0 && v == 0.0) throw DomainError("abs: derivative requested at kink x = 0");
      const double sg = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      return apply_series(x, {std::abs(v), sg, 0.0, 0.0});
    }
    case Op::kSign: {
      if (order > 0 && v == 0.0) throw DomainError("sign: derivative requested at kink x = 0");
      const double sg = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      return apply_series(x, {sg, 0.0, 0.0, 0.0});
    }
    case Op::kPositive: {
      if (!(v > 0.0)) throw DomainError("expected a positive value, got " + std::to_string(v));
      return x;
    }
    default:
      throw Error("not a unary operation");
  }
}

template <class T>
T reciprocal(const T& x) {
  const double v = value_of(x);
  if (v == 0.0) throw DomainError("division by zero");
  if constexpr (std::is_same_v<T, double>) {
    return 1.0 / v;
  } else {
    const double r = 1.0 / v;
    return compose_series(x, {r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r});
  }
}

template <class T>
T power(const T& base, const T& exponent, bool constant_exponent) {
  const double b = value_of(base);
  if (constant_exponent) {
    const double r = value_of(exponent);
    if (is_integer(r)) {
      if (b == 0.0 && r < 0.0) throw DomainError("power: zero to a negative power");
      if constexpr (std::is_same_v<T, double>) {
        return std::pow(b, r);
      } else {
        return compose_series(base, power_series(b, r));
      }
    }
    if (b < 0.0) throw DomainError("power: negative base with non-integer exponent");
    if constexpr (std::is_same_v<T, double>) {
      return std::pow(b, r);
    } else {
      if (b == 0.0) throw DomainError("power: derivative of non-integer power undefined at 0");
      return compose_series(base, power_series(b, r));
    }
  }
  if (!(b > 0.0)) throw DomainError("power: variable exponent requires a positive base");
  return unary(Op::kExp, exponent * unary(Op::kLog, base));
}

}  // namespace detail

/// Evaluate a tape at the given variable values.
template <class T>
T evaluate(const Tape& tape, std::span<const T> vars) {
  std::vector<T> vals(tape.nodes.size());
  for (std::size_t i = 0; i < tape.nodes.size(); ++i) {
    const Node& n = tape.nodes[i];
    const auto A = [&]() -> const T& { return vals[static_cast<std::size_t>(n.a)]; };
    const auto B = [&]() -> const T& { return vals[static_cast<std::size_t>(n.b)]; };
    switch (n.op) {
      case Op::kConst:
        if constexpr (std::is_same_v<T, double>) {
          vals[i] = n.value;
        } else {
          vals[i] = T::scalar(n.value);
        }
        break;
      case Op::kVar:
        vals[i] = vars[static_cast<std::size_t>(n.var)];
        break;
      case Op::kAdd: vals[i] = A() + B(); break;
      case Op::kSub: vals[i] = A() - B(); break;
      case Op::kMul: vals[i] = A() * B(); break;
      case Op::kDiv: vals[i] = A() * detail::reciprocal(B()); break;
      case Op::kPow:
        vals[i] = detail::power(A(), B(), tape.nodes[static_cast<std::size_t>(n.b)].op == Op::kConst);
        break;
      default:
        vals[i] = detail::unary(n.op, A());
        break;
    }
  }
  return vals.back();
}

// ---------------------------------------------------------------------------

/// Interning builder with light constant folding.
class ExprBuilder {
 public:
  int constant(double v) { return intern({Op::kConst, -1, -1, -1, v}); }
  int variable(int k) { return intern({Op::kVar, -1, -1, k, 0.0}); }

  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  bool is_const(int i, double v) const {
    const Node& n = node(i);
    return n.op == Op::kConst && n.value == v;
  }
  bool is_const(int i) const { return node(i).op == Op::kConst; }

  int unary(Op op, int a) {
    if (is_const(a)) {
      try {
        return constant(detail::unary<double>(op, node(a).value));
      } catch (const DomainError&) {
        // keep the node so the error surfaces at evaluation time
      }
    }
    if (op == Op::kNeg && node(a).op == Op::kNeg) return node(a).a;
    return intern({op, a, -1, -1, 0.0});
  }

  int binary(Op op, int a, int b) {
    if (is_const(a) && is_const(b)) {
      const double x = node(a).value, y = node(b).value;
      switch (op) {
        case Op::kAdd: return constant(x + y);
        case Op::kSub: return constant(x - y);
        case Op::kMul: return constant(x * y);
        case Op::kDiv:
          if (y != 0.0) return constant(x / y);
          break;
        case Op::kPow:
          try {
            return constant(detail::power<double>(x, y, true));
          } catch (const DomainError&) {
          }
          break;
        default:
          break;
      }
    }
    switch (op) {
      case Op::kAdd:
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
      case Op::kSub:
        if (is_const(b, 0.0)) return a;
        if (is_const(a, 0.0)) return unary(Op::kNeg, b);
        if (a == b) return constant(0.0);
        break;
      case Op::kMul:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        if (is_const(a, -1.0)) return unary(Op::kNeg, b);
        if (is_const(b, -1.0)) return unary(Op::kNeg, a);
        break;
      case Op::kDiv:
        if (is_const(b, 1.0)) return a;
        break;
      case Op::kPow:
        if (is_const(b, 1.0)) return a;
        if (is_const(b, 0.0)) return constant(1.0);
        break;
      default:
        break;
    }
    return intern({op, a, b, -1, 0.0});
  }

  /// Copy `tape` into this builder with variable k replaced by node
  /// `substitution[k]`. Returns the index of the imported root.
  int import(const Tape& tape, std::span<const int> substitution) {
    std::vector<int> map(tape.nodes.size());
    for (std::size_t i = 0; i < tape.nodes.size(); ++i) {
      const Node& n = tape.nodes[i];
      switch (n.op) {
        case Op::kConst: map[i] = constant(n.value); break;
        case Op::kVar: map[i] = substitution[static_cast<std::size_t>(n.var)]; break;
        default:
          if (is_unary(n.op)) {
            map[i] = unary(n.op, map[static_cast<std::size_t>(n.a)]);
          } else {
            map[i] = binary(n.op, map[static_cast<std::size_t>(n.a)], map[static_cast<std::size_t>(n.b)]);
          }
      }
    }
    return map.back();
  }

  /// Import with the identity substitution on `arity` variables.
  int import(const Tape& tape, int arity) {
    std::vector<int> sub(static_cast<std::size_t>(arity));
    for (int k = 0; k < arity; ++k) sub[static_cast<std::size_t>(k)] = variable(k);
    return import(tape, sub);
  }

  /// Symbolic partial derivative of node `root` with respect to variable k.
  int differentiate(int root, int k) {
    std::unordered_map<int, int> memo;
    return diff(root, k, memo);
  }

  /// Extract the sub-DAG reachable from `root` as a compact tape.
  Tape extract(int root) const {
    std::vector<int> order;
    std::vector<char> seen(nodes_.size(), 0);
    // iterative post-order
    std::vector<std::pair<int, int>> stack{{root, 0}};
    while (!stack.empty()) {
      auto& [i, state] = stack.back();
      const Node& n = node(i);
      if (seen[static_cast<std::size_t>(i)]) {
        stack.pop_back();
        continue;
      }
      if (state == 0) {
        state = 1;
        if (n.a >= 0 && !seen[static_cast<std::size_t>(n.a)]) stack.push_back({n.a, 0});
        continue;
      }
      if (state == 1) {
        state = 2;
        if (n.b >= 0 && !seen[static_cast<std::size_t>(n.b)]) stack.push_back({n.b, 0});
        continue;
      }
      seen[static_cast<std::size_t>(i)] = 1;
      order.push_back(i);
      stack.pop_back();
    }
    std::vector<int> remap(nodes_.size(), -1);
    Tape tape;
    tape.nodes.reserve(order.size());
    for (int i : order) {
      Node n = node(i);
      if (n.a >= 0) n.a = remap[static_cast<std::size_t>(n.a)];
      if (n.b >= 0) n.b = remap[static_cast<std::size_t>(n.b)];
      remap[static_cast<std::size_t>(i)] = static_cast<int>(tape.nodes.size());
      tape.nodes.push_back(n);
    }
    return tape;
  }

 private:
  int intern(const Node& n) {
    auto it = index_.find(n);
    if (it != index_.end()) return it->second;
    const int i = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    index_.emplace(n, i);
    return i;
  }

  int diff(int i, int k, std::unordered_map<int, int>& memo) {
    if (auto it = memo.find(i); it != memo.end()) return it->second;
    const Node n = node(i);
    int r = -1;
    const auto da = [&] { return diff(n.a, k, memo); };
    const auto db = [&] { return diff(n.b, k, memo); };
    switch (n.op) {
      case Op::kConst: r = constant(0.0); break;
      case Op::kVar: r = constant(n.var == k ? 1.0 : 0.0); break;
      case Op::kAdd: r = binary(Op::kAdd, da(), db()); break;
      case Op::kSub: r = binary(Op::kSub, da(), db()); break;
      case Op::kNeg: r = unary(Op::kNeg, da()); break;
      case Op::kMul:
        r = binary(Op::kAdd, binary(Op::kMul, da(), n.b), binary(Op::kMul, n.a, db()));
        break;
      case Op::kDiv: {
        // (a/b)' = a'/b - a b' / b^2
        const int t1 = binary(Op::kDiv, da(), n.b);
        const int t2 = binary(Op::kDiv, binary(Op::kMul, n.a, db()), binary(Op::kMul, n.b, n.b));
        r = binary(Op::kSub, t1, t2);
        break;
      }
      case Op::kPow: {
        if (is_const(n.b)) {
          const double e = node(n.b).value;
          const int p = binary(Op::kPow, n.a, constant(e - 1.0));
          r = binary(Op::kMul, binary(Op::kMul, constant(e), p), da());
        } else {
          // (a^b)' = a^b (b' log a + b a'/a)
          const int t1 = binary(Op::kMul, db(), unary(Op::kLog, n.a));
          const int t2 = binary(Op::kDiv, binary(Op::kMul, n.b, da()), n.a);
          r = binary(Op::kMul, i, binary(Op::kAdd, t1, t2));
        }
        break;
      }
      case Op::kSin: r = binary(Op::kMul, unary(Op::kCos, n.a), da()); break;
      case Op::kCos: r = unary(Op::kNeg, binary(Op::kMul, unary(Op::kSin, n.a), da())); break;
      case Op::kTan:
        r = binary(Op::kMul, binary(Op::kAdd, constant(1.0), binary(Op::kMul, i, i)), da());
        break;
      case Op::kExp: r = binary(Op::kMul, i, da()); break;
      case Op::kLog: r = binary(Op::kDiv, da(), n.a); break;
      case Op::kSqrt: r = binary(Op::kDiv, da(), binary(Op::kMul, constant(2.0), i)); break;
      case Op::kAbs: r = binary(Op::kMul, unary(Op::kSign, n.a), da()); break;
      case Op::kSign: r = constant(0.0); break;
      case Op::kPositive: r = da(); break;
    }
    memo.emplace(i, r);
    return r;
  }

  std::vector<Node> nodes_;
  std::unordered_map<Node, int, NodeHash> index_;
};

// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

/// Fully parenthesized infix text that the parser reads back. The guard op
/// kPositive prints as its argument.
inline std::string to_string(const Tape& tape, std::span<const std::string> names) {
  std::vector<std::string> text(tape.nodes.size());
  for (std::size_t i = 0; i < tape.nodes.size(); ++i) {
    const Node& n = tape.nodes[i];
    const auto A = [&] { return text[static_cast<std::size_t>(n.a)]; };
    const auto B = [&] { return text[static_cast<std::size_t>(n.b)]; };
    switch (n.op) {
      case Op::kConst:
        text[i] = n.value < 0.0 ? "(" + detail::format_number(n.value) + ")" : detail::format_number(n.value);
        break;
      case Op::kVar:
        text[i] = static_cast<std::size_t>(n.var) < names.size() ? names[static_cast<std::size_t>(n.var)]
                                                                   : "x" + std::to_string(n.var + 1);
        break;
      case Op::kAdd: text[i] = "(" + A() + " + " + B() + ")"; break;
      case Op::kSub: text[i] = "(" + A() + " - " + B() + ")"; break;
      case Op::kMul: text[i] = "(" + A() + " * " + B() + ")"; break;
      case Op::kDiv: text[i] = "(" + A() + " / " + B() + ")"; break;
      case Op::kPow: text[i] = "(" + A() + " ^ " + B() + ")"; break;
      case Op::kNeg: text[i] = "(-" + A() + ")"; break;
      case Op::kPositive: text[i] = A(); break;
      default: text[i] = std::string(function_name(n.op)) + "(" + A() + ")"; break;
    }
  }
  return text.back();
}

}  // namespace nullift::expr

#pragma once

// Recursive-descent parser for the scalar expression language:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?          right-associative
//   primary := number | name | name '(' expr ')' | '(' expr ')'
//
// Unary minus binds looser than '^', so -x^2 is -(x^2).

#include <cctype>
#include <cstdlib>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/fields/expression.hpp"
#include "nullift/fields/scalar_field.hpp"

namespace nullift {

namespace detail {

class ExpressionParser {
 public:
  ExpressionParser(std::string_view text, std::span<const std::string> vars) : text_(text), vars_(vars) {}

  int parse() {
    skip_space();
    if (pos_ >= text_.size()) fail("empty expression", pos_, "");
    const int root = parse_expr();
    skip_space();
    if (pos_ < text_.size()) fail_here("unexpected");
    return root;
  }

  expr::ExprBuilder& builder() { return builder_; }

 private:
  static bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool is_name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  std::string current_token() const {
    if (pos_ >= text_.size()) return "<end>";
    const char c = text_[pos_];
    if (is_name_start(c)) {
      std::size_t e = pos_;
      while (e < text_.size() && is_name_char(text_[e])) ++e;
      return std::string(text_.substr(pos_, e - pos_));
    }
    return std::string(1, c);
  }

  [[noreturn]] void fail(const std::string& what, std::size_t at, const std::string& token) const {
    std::string context;
    if (at > 0 && at <= text_.size()) {
      // include the preceding non-space character, e.g. '^/'
      std::size_t b = at;
      while (b > 0 && std::isspace(static_cast<unsigned char>(text_[b - 1]))) --b;
      if (b > 0) context = std::string(1, text_[b - 1]) + (at < text_.size() ? std::string(1, text_[at]) : "");
    }
    std::string msg = "syntax error: " + what + " '" + token + "' at column " + std::to_string(at + 1);
    if (!context.empty()) msg += " (near '" + context + "')";
    throw ParseError(msg, at, token);
  }

  [[noreturn]] void fail_here(const std::string& what) {
    skip_space();
    fail(what + " token", pos_, current_token());
  }

  int parse_expr() {
    int lhs = parse_term();
    for (;;) {
      const char c = peek();
      if (c == '+' || c == '-') {
        ++pos_;
        const int rhs = parse_term();
        lhs = builder_.binary(c == '+' ? expr::Op::kAdd : expr::Op::kSub, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int parse_term() {
    int lhs = parse_unary();
    for (;;) {
      const char c = peek();
      if (c == '*' || c == '/') {
        ++pos_;
        const int rhs = parse_unary();
        lhs = builder_.binary(c == '*' ? expr::Op::kMul : expr::Op::kDiv, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    const char c = peek();
    if (c == '-') {
      ++pos_;
      return builder_.unary(expr::Op::kNeg, parse_unary());
    }
    if (c == '+') {
      ++pos_;
      return parse_unary();
    }
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    if (peek() == '^') {
      ++pos_;
      const int exponent = parse_unary();
      return builder_.binary(expr::Op::kPow, base, exponent);
    }
    return base;
  }

  int parse_primary() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      const int inner = parse_expr();
      if (peek() != ')') fail_here("expected ')' but found");
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (is_name_start(c)) return parse_name();
    fail_here("unexpected");
  }

  int parse_number() {
    const std::size_t start = pos_;
    std::size_t e = pos_;
    while (e < text_.size() && std::isdigit(static_cast<unsigned char>(text_[e]))) ++e;
    if (e < text_.size() && text_[e] == '.') {
      ++e;
      while (e < text_.size() && std::isdigit(static_cast<unsigned char>(text_[e]))) ++e;
    }
    if (e < text_.size() && (text_[e] == 'e' || text_[e] == 'E')) {
      std::size_t f = e + 1;
      if (f < text_.size() && (text_[f] == '+' || text_[f] == '-')) ++f;
      if (f < text_.size() && std::isdigit(static_cast<unsigned char>(text_[f]))) {
        while (f < text_.size() && std::isdigit(static_cast<unsigned char>(text_[f]))) ++f;
        e = f;
      }
    }
    const std::string literal(text_.substr(start, e - start));
    if (literal == ".") fail("malformed number", start, literal);
    char* end = nullptr;
    const double v = std::strtod(literal.c_str(), &end);
    if (end != literal.c_str() + literal.size()) fail("malformed number", start, literal);
    pos_ = e;
    return builder_.constant(v);
  }

  int parse_name() {
    const std::size_t start = pos_;
    std::size_t e = pos_;
    while (e < text_.size() && is_name_char(text_[e])) ++e;
    const std::string name(text_.substr(start, e - start));
    pos_ = e;
    static const std::map<std::string, expr::Op> functions = {
        {"sin", expr::Op::kSin},   {"cos", expr::Op::kCos}, {"tan", expr::Op::kTan},
        {"exp", expr::Op::kExp},   {"log", expr::Op::kLog}, {"sqrt", expr::Op::kSqrt},
        {"abs", expr::Op::kAbs},   {"sign", expr::Op::kSign},
    };
    if (auto it = functions.find(name); it != functions.end()) {
      if (peek() != '(') fail_here("expected '(' after function '" + name + "' but found");
      ++pos_;
      const int arg = parse_expr();
      if (peek() == ',') fail("arity mismatch: function '" + name + "' takes one argument, extra", pos_, ",");
      if (peek() != ')') fail_here("expected ')' but found");
      ++pos_;
      return builder_.unary(it->second, arg);
    }
    for (std::size_t k = 0; k < vars_.size(); ++k) {
      if (vars_[k] == name) {
        if (peek() == '(') fail("variable used as a function:", start, name);
        return builder_.variable(static_cast<int>(k));
      }
    }
    fail("unknown identifier", start, name);
  }

  std::string_view text_;
  std::span<const std::string> vars_;
  std::size_t pos_ = 0;
  expr::ExprBuilder builder_;
};

}  // namespace detail

/// Parse `text` as a field over the ordered variable names `vars`.
inline ScalarField parse_scalar_field(std::string_view text, std::span<const std::string> vars) {
  detail::ExpressionParser parser(text, vars);
  const int root = parser.parse();
  auto tape = std::make_shared<expr::Tape>(parser.builder().extract(root));
  return ScalarField(static_cast<int>(vars.size()), std::move(tape), std::string(text));
}

inline ScalarField parse_scalar_field(std::string_view text, std::initializer_list<std::string> vars) {
  const std::vector<std::string> v(vars);
  return parse_scalar_field(text, std::span<const std::string>(v));
}

/// Standard names for a point of dimension n+extra: q1..qn followed by `extra`.
inline std::vector<std::string> coordinate_names(int n, std::initializer_list<std::string> extra = {"u", "v"}) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("q" + std::to_string(i));
  names.insert(names.end(), extra.begin(), extra.end());
  return names;
}

}  // namespace nullift

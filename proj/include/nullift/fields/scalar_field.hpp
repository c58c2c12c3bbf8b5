#pragma once

#include <algorithm>
#include <initializer_list>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/fields/expression.hpp"
#include "nullift/fields/jet.hpp"

namespace nullift {

/// Immutable smooth function of `arity` coordinates backed by an expression
/// DAG. Cheap to copy (shared tape).
class ScalarField {
 public:
  ScalarField() : ScalarField(constant(0, 0.0)) {}

  static ScalarField constant(int arity, double value) {
    expr::ExprBuilder b;
    const int root = b.constant(value);
    return ScalarField(arity, std::make_shared<expr::Tape>(b.extract(root)), "builtin:constant");
  }

  static ScalarField coordinate(int arity, int k) {
    if (k < 0 || k >= arity) throw PreconditionError("coordinate index out of range");
    expr::ExprBuilder b;
    const int root = b.variable(k);
    return ScalarField(arity, std::make_shared<expr::Tape>(b.extract(root)), "builtin:coordinate");
  }

  ScalarField(int arity, std::shared_ptr<const expr::Tape> tape, std::string provenance)
      : arity_(arity), tape_(std::move(tape)), provenance_(std::move(provenance)) {}

  int arity() const { return arity_; }
  const expr::Tape& tape() const { return *tape_; }
  const std::string& provenance() const { return provenance_; }
  ScalarField with_provenance(std::string p) const { return ScalarField(arity_, tape_, std::move(p)); }

  bool is_constant() const { return tape_->nodes.size() == 1 && tape_->nodes[0].op == expr::Op::kConst; }
  std::optional<double> constant_value() const {
    if (!is_constant()) return std::nullopt;
    return tape_->nodes[0].value;
  }
  bool is_zero() const { return is_constant() && tape_->nodes[0].value == 0.0; }

  /// Coordinates the expression actually references.
  std::set<int> dependencies() const {
    std::set<int> deps;
    for (const auto& n : tape_->nodes)
      if (n.op == expr::Op::kVar) deps.insert(n.var);
    return deps;
  }

  double operator()(std::span<const double> y) const {
    check_arity(y.size());
    return expr::evaluate<double>(*tape_, y);
  }
  double operator()(std::initializer_list<double> y) const {
    return (*this)(std::span<const double>(y.begin(), y.size()));
  }

  /// Evaluate on jets (or any number type the tape evaluator accepts).
  template <class T>
  T evaluate(std::span<const T> y) const {
    check_arity(y.size());
    return expr::evaluate<T>(*tape_, y);
  }

  /// Mixed partial derivative of order 1..3 via forward-mode jets seeded
  /// only in the directions the multi-index uses.
  double derivative(std::span<const double> y, std::span<const int> multi_index) const {
    check_arity(y.size());
    const std::size_t order = multi_index.size();
    if (order < 1 || order > 3) throw PreconditionError("derivative order must be 1, 2 or 3");
    std::vector<int> distinct(multi_index.begin(), multi_index.end());
    for (int k : distinct)
      if (k < 0 || k >= arity_) throw PreconditionError("derivative index out of range");
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> seeds(multi_index.size());
    for (std::size_t t = 0; t < multi_index.size(); ++t) {
      seeds[t] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), multi_index[t]) - distinct.begin());
    }
    switch (order) {
      case 1: return jet_derivative<1>(y, distinct, seeds);
      case 2: return jet_derivative<2>(y, distinct, seeds);
      default: return jet_derivative<3>(y, distinct, seeds);
    }
  }
  double derivative(std::initializer_list<double> y, std::initializer_list<int> multi_index) const {
    return derivative(std::span<const double>(y.begin(), y.size()),
                      std::span<const int>(multi_index.begin(), multi_index.size()));
  }

  /// Full jet of the field at y, seeded in every coordinate direction.
  template <int Order>
  Jet<Order> jet(std::span<const double> y) const {
    check_arity(y.size());
    const auto* layout = Jet<Order>::layout_for(arity_);
    std::vector<Jet<Order>> vars;
    vars.reserve(y.size());
    for (int k = 0; k < arity_; ++k) vars.push_back(Jet<Order>::variable(layout, k, y[static_cast<std::size_t>(k)]));
    return evaluate<Jet<Order>>(vars);
  }

  /// Symbolic partial derivative as a new field.
  ScalarField partial(int k) const {
    if (k < 0 || k >= arity_) throw PreconditionError("partial index out of range");
    expr::ExprBuilder b;
    const int root = b.import(*tape_, arity_);
    const int d = b.differentiate(root, k);
    return ScalarField(arity_, std::make_shared<expr::Tape>(b.extract(d)), "d/dx" + std::to_string(k + 1) + "(" + provenance_ + ")");
  }

  std::string to_string(std::span<const std::string> names = {}) const {
    return expr::to_string(*tape_, names);
  }

  // -- arithmetic ----------------------------------------------------------
  friend ScalarField operator+(const ScalarField& a, const ScalarField& b) { return combine(expr::Op::kAdd, a, b); }
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b) { return combine(expr::Op::kSub, a, b); }
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b) { return combine(expr::Op::kMul, a, b); }
  friend ScalarField operator/(const ScalarField& a, const ScalarField& b) { return combine(expr::Op::kDiv, a, b); }
  friend ScalarField operator+(const ScalarField& a, double s) { return a + constant(a.arity_, s); }
  friend ScalarField operator+(double s, const ScalarField& a) { return constant(a.arity_, s) + a; }
  friend ScalarField operator-(const ScalarField& a, double s) { return a - constant(a.arity_, s); }
  friend ScalarField operator-(double s, const ScalarField& a) { return constant(a.arity_, s) - a; }
  friend ScalarField operator*(const ScalarField& a, double s) { return a * constant(a.arity_, s); }
  friend ScalarField operator*(double s, const ScalarField& a) { return constant(a.arity_, s) * a; }
  friend ScalarField operator/(const ScalarField& a, double s) { return a / constant(a.arity_, s); }
  friend ScalarField operator/(double s, const ScalarField& a) { return constant(a.arity_, s) / a; }
  friend ScalarField operator-(const ScalarField& a) { return apply(expr::Op::kNeg, a); }

  friend ScalarField pow(const ScalarField& a, const ScalarField& b) { return combine(expr::Op::kPow, a, b); }
  friend ScalarField pow(const ScalarField& a, double e) { return pow(a, constant(a.arity_, e)); }
  friend ScalarField sin(const ScalarField& a) { return apply(expr::Op::kSin, a); }
  friend ScalarField cos(const ScalarField& a) { return apply(expr::Op::kCos, a); }
  friend ScalarField tan(const ScalarField& a) { return apply(expr::Op::kTan, a); }
  friend ScalarField exp(const ScalarField& a) { return apply(expr::Op::kExp, a); }
  friend ScalarField log(const ScalarField& a) { return apply(expr::Op::kLog, a); }
  friend ScalarField sqrt(const ScalarField& a) { return apply(expr::Op::kSqrt, a); }
  friend ScalarField abs(const ScalarField& a) { return apply(expr::Op::kAbs, a); }
  friend ScalarField sign(const ScalarField& a) { return apply(expr::Op::kSign, a); }
  /// Identity that raises DomainError wherever the argument is not > 0.
  friend ScalarField require_positive(const ScalarField& a) { return apply(expr::Op::kPositive, a); }

  /// f(g_1(x), ..., g_k(x)): substitute field arguments for the variables.
  friend ScalarField compose(const ScalarField& f, std::span<const ScalarField> args) {
    if (static_cast<int>(args.size()) != f.arity_) throw PreconditionError("compose: argument count does not match arity");
    const int arity = args.empty() ? 0 : args.front().arity_;
    expr::ExprBuilder b;
    std::vector<int> sub;
    sub.reserve(args.size());
    for (const auto& g : args) {
      if (g.arity_ != arity) throw PreconditionError("compose: arguments have different arities");
      sub.push_back(b.import(g.tape(), g.arity_));
    }
    const int root = b.import(f.tape(), sub);
    return ScalarField(arity, std::make_shared<expr::Tape>(b.extract(root)), f.provenance_);
  }

  /// Same expression viewed as a function of `arity` coordinates, variable k
  /// mapped to coordinate index_map[k].
  ScalarField remap(int arity, std::span<const int> index_map) const {
    if (static_cast<int>(index_map.size()) != arity_) throw PreconditionError("remap: index map size does not match arity");
    std::vector<ScalarField> args;
    args.reserve(index_map.size());
    for (int k : index_map) args.push_back(coordinate(arity, k));
    if (args.empty()) return ScalarField(arity, tape_, provenance_);
    return compose(*this, args).with_provenance(provenance_);
  }

 private:
  void check_arity(std::size_t n) const {
    if (static_cast<int>(n) != arity_) {
      throw PreconditionError("field of arity " + std::to_string(arity_) + " evaluated at a point of dimension " +
                              std::to_string(n));
    }
  }

  template <int Order>
  double jet_derivative(std::span<const double> y, const std::vector<int>& distinct, const std::vector<int>& seeds) const {
    const auto* layout = Jet<Order>::layout_for(static_cast<int>(distinct.size()));
    std::vector<Jet<Order>> vars;
    vars.reserve(y.size());
    for (int k = 0; k < arity_; ++k) {
      const auto it = std::find(distinct.begin(), distinct.end(), k);
      if (it != distinct.end()) {
        vars.push_back(Jet<Order>::variable(layout, static_cast<int>(it - distinct.begin()), y[static_cast<std::size_t>(k)]));
      } else {
        vars.push_back(Jet<Order>::constant(layout, y[static_cast<std::size_t>(k)]));
      }
    }
    const Jet<Order> r = evaluate<Jet<Order>>(vars);
    return r.derivative(std::span<const int>(seeds));
  }

  static ScalarField combine(expr::Op op, const ScalarField& a, const ScalarField& b) {
    if (a.arity_ != b.arity_) {
      throw PreconditionError("arity mismatch: " + std::to_string(a.arity_) + " vs " + std::to_string(b.arity_));
    }
    expr::ExprBuilder builder;
    const int ia = builder.import(*a.tape_, a.arity_);
    const int ib = builder.import(*b.tape_, b.arity_);
    const int root = builder.binary(op, ia, ib);
    return ScalarField(a.arity_, std::make_shared<expr::Tape>(builder.extract(root)), "expression");
  }

  static ScalarField apply(expr::Op op, const ScalarField& a) {
    expr::ExprBuilder builder;
    const int ia = builder.import(*a.tape_, a.arity_);
    const int root = builder.unary(op, ia);
    return ScalarField(a.arity_, std::make_shared<expr::Tape>(builder.extract(root)), "expression");
  }

  int arity_ = 0;
  std::shared_ptr<const expr::Tape> tape_;
  std::string provenance_;
};

/// Symmetric dim x dim matrix of fields; entry(i,j) and entry(j,i) share
/// storage.
class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(int dim, int arity) : dim_(dim), arity_(arity) {
    entries_.assign(static_cast<std::size_t>(dim * (dim + 1) / 2), ScalarField::constant(arity, 0.0));
  }

  static MatrixField identity(int dim, int arity) {
    MatrixField m(dim, arity);
    for (int i = 0; i < dim; ++i) m.set(i, i, ScalarField::constant(arity, 1.0));
    return m;
  }

  int dim() const { return dim_; }
  int arity() const { return arity_; }

  const ScalarField& operator()(int i, int j) const { return entries_[slot(i, j)]; }
  void set(int i, int j, ScalarField f) {
    if (f.arity() != arity_) throw PreconditionError("matrix entry arity mismatch");
    entries_[slot(i, j)] = std::move(f);
  }

 private:
  std::size_t slot(int i, int j) const {
    if (i < 0 || j < 0 || i >= dim_ || j >= dim_) throw PreconditionError("matrix index out of range");
    if (i > j) std::swap(i, j);
    return static_cast<std::size_t>(i * dim_ - i * (i - 1) / 2 + (j - i));
  }

  int dim_ = 0;
  int arity_ = 0;
  std::vector<ScalarField> entries_;
};

inline double eval_field(const ScalarField& f, std::span<const double> y) { return f(y); }

inline double derivative(const ScalarField& f, std::span<const double> y, std::span<const int> multi_index) {
  return f.derivative(y, multi_index);
}

}  // namespace nullift

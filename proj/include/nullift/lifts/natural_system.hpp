#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/fields/parser.hpp"
#include "nullift/fields/scalar_field.hpp"
#include "nullift/geometry/tensor.hpp"

namespace nullift {

/// H = ½ h^{ij}(p_i + e A_i)(p_j + e A_j) + e² V.
///
/// Fields are functions of (q¹..qⁿ, u) where u is the lift coordinate,
/// related to base time by t = −u/e. The kinetic metric is stored with lower
/// indices h_ij; h^{ij} is obtained by pointwise inversion.
struct NaturalSystem {
  int n = 1;
  MatrixField h;
  ScalarField V;
  std::vector<ScalarField> A;  // empty means A = 0
  double e = 1.0;
  std::string name = "custom";

  int arity() const { return n + 1; }

  bool has_vector_potential() const {
    for (const auto& a : A)
      if (!a.is_zero()) return true;
    return false;
  }

  bool time_dependent() const {
    const auto uses_u = [&](const ScalarField& f) { return f.dependencies().count(n) > 0; };
    if (uses_u(V)) return true;
    for (const auto& a : A)
      if (uses_u(a)) return true;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (uses_u(h(i, j))) return true;
    return false;
  }

  void validate() const {
    if (n < 1) throw PreconditionError("natural system needs n >= 1");
    if (h.dim() != n || h.arity() != arity()) throw PreconditionError("kinetic metric must be n x n over (q, u)");
    if (V.arity() != arity()) throw PreconditionError("potential must be a field over (q, u)");
    if (!A.empty() && static_cast<int>(A.size()) != n) throw PreconditionError("vector potential needs n components");
    for (const auto& a : A)
      if (a.arity() != arity()) throw PreconditionError("vector potential must be fields over (q, u)");
    if (e == 0.0) throw PreconditionError("coupling e must be nonzero");
  }

  ScalarField A_component(int i) const { return A.empty() ? ScalarField::constant(arity(), 0.0) : A[static_cast<std::size_t>(i)]; }

  Mat h_matrix(std::span<const double> qu) const {
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) m(i, j) = m(j, i) = h(i, j)(qu);
    return m;
  }

  Mat h_inverse(std::span<const double> qu) const {
    const Mat m = h_matrix(qu);
    Eigen::FullPivLU<Mat> lu(m);
    if (!lu.isInvertible()) throw SingularMetricError("kinetic metric h is singular");
    return lu.inverse();
  }

  /// H(q, p) at lift coordinate u.
  double hamiltonian(std::span<const double> q, std::span<const double> p, double u = 0.0) const {
    std::vector<double> qu(q.begin(), q.end());
    qu.push_back(u);
    Vec k(n);
    for (int i = 0; i < n; ++i) k(i) = p[static_cast<std::size_t>(i)] + e * (A.empty() ? 0.0 : A[static_cast<std::size_t>(i)](qu));
    return 0.5 * k.dot(h_inverse(qu) * k) + e * e * V(qu);
  }
};

/// Registry of builtin systems: "free" (n), "harmonic" (omega, n),
/// "kepler" (G0, M; n = 2).
inline NaturalSystem builtin_system(const std::string& name, const std::map<std::string, double>& params = {}) {
  const auto get = [&](const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  const auto require = [&](const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) throw PreconditionError("missing param " + key);
    return it->second;
  };
  NaturalSystem s;
  s.name = name;
  s.e = get("e", 1.0);
  if (name == "free" || name == "harmonic") {
    s.n = static_cast<int>(get("n", 1));
    if (s.n < 1) throw PreconditionError("n must be >= 1");
  } else if (name == "kepler") {
    s.n = 2;
  } else {
    throw PreconditionError("unknown builtin system '" + name + "'");
  }
  const int arity = s.n + 1;
  s.h = MatrixField::identity(s.n, arity);
  if (name == "free") {
    s.V = ScalarField::constant(arity, 0.0).with_provenance("builtin:free");
  } else if (name == "harmonic") {
    const double w = require("omega");
    ScalarField V = ScalarField::constant(arity, 0.0);
    for (int i = 0; i < s.n; ++i) V = V + pow(ScalarField::coordinate(arity, i), 2.0);
    s.V = (0.5 * w * w * V).with_provenance("builtin:harmonic");
  } else {
    const double k = require("G0") * require("M");
    const auto q1 = ScalarField::coordinate(arity, 0), q2 = ScalarField::coordinate(arity, 1);
    s.V = (-k / sqrt(q1 * q1 + q2 * q2)).with_provenance("builtin:kepler");
  }
  return s;
}

/// System from expressions over q1..qn and u (h given as rows of h_ij).
inline NaturalSystem custom_system(int n, const std::vector<std::vector<std::string>>& h_rows, const std::string& V,
                                   const std::vector<std::string>& A = {}, double e = 1.0) {
  NaturalSystem s;
  s.n = n;
  s.e = e;
  const auto vars = coordinate_names(n, {"u"});
  if (h_rows.empty()) {
    s.h = MatrixField::identity(n, n + 1);
  } else {
    if (static_cast<int>(h_rows.size()) != n) throw PreconditionError("h must have n rows");
    s.h = MatrixField(n, n + 1);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(h_rows[static_cast<std::size_t>(i)].size()) != n) throw PreconditionError("h must be n x n");
      for (int j = i; j < n; ++j) s.h.set(i, j, parse_scalar_field(h_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], vars));
    }
  }
  s.V = parse_scalar_field(V, vars);
  for (const auto& a : A) s.A.push_back(parse_scalar_field(a, vars));
  s.validate();
  return s;
}

}  // namespace nullift

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nullift/dualities/map.hpp"
#include "nullift/errors.hpp"
#include "nullift/fields/scalar_field.hpp"
#include "nullift/lifts/natural_system.hpp"

namespace nullift {

// ------------------------------------------------------------ Schrödinger group

/// q̄ = (Aq + bu + c)/(fu + g), ū = (du + e)/(fu + g),
/// v̄ = v + (f/2)|Aq + bu + c|²/(fu + g) − b·Aq − |b|²u/2 + h,
/// with A orthogonal and dg − ef = 1.
struct SchrodingerGroupElement {
  Mat A;
  Vec b;
  Vec c;
  double d = 1.0, e = 0.0, f = 0.0, g = 1.0;
  double h = 0.0;

  static SchrodingerGroupElement identity(int n) {
    SchrodingerGroupElement el;
    el.A = Mat::Identity(n, n);
    el.b = Vec::Zero(n);
    el.c = Vec::Zero(n);
    return el;
  }

  int n() const { return static_cast<int>(A.rows()); }

  void validate() const {
    const int k = n();
    if (k < 1 || A.cols() != k || b.size() != k || c.size() != k) throw PreconditionError("group element: inconsistent dimensions");
    if ((A.transpose() * A - Mat::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-12) throw PreconditionError("group element: A is not orthogonal");
    if (std::abs(d * g - e * f - 1.0) > 1e-12) throw PreconditionError("group element: dg - ef != 1");
  }

  /// [[A, b, c], [0, d, e], [0, f, g]].
  Mat matrix() const {
    const int k = n();
    Mat M = Mat::Zero(k + 2, k + 2);
    M.topLeftCorner(k, k) = A;
    M.block(0, k, k, 1) = b;
    M.block(0, k + 1, k, 1) = c;
    M(k, k) = d;
    M(k, k + 1) = e;
    M(k + 1, k) = f;
    M(k + 1, k + 1) = g;
    return M;
  }

  static SchrodingerGroupElement from_matrix(const Mat& M, double h = 0.0) {
    const int k = static_cast<int>(M.rows()) - 2;
    SchrodingerGroupElement el;
    el.A = M.topLeftCorner(k, k);
    el.b = M.block(0, k, k, 1);
    el.c = M.block(0, k + 1, k, 1);
    el.d = M(k, k);
    el.e = M(k, k + 1);
    el.f = M(k + 1, k);
    el.g = M(k + 1, k + 1);
    el.h = h;
    return el;
  }

  /// v̄ − v at (q, u), i.e. the v-shift including h.
  double v_shift(const Vec& q, double u) const {
    const Vec Q = A * q + b * u + c;
    const double w = f * u + g;
    return 0.5 * f * Q.squaredNorm() / w - b.dot(A * q) - 0.5 * b.squaredNorm() * u + h;
  }

  std::vector<double> apply(std::span<const double> y) const {
    const int k = n();
    const Vec q = Eigen::Map<const Vec>(y.data(), k);
    const double u = y[static_cast<std::size_t>(k)], v = y[static_cast<std::size_t>(k + 1)];
    const double w = f * u + g;
    if (std::abs(w) < 1e-14) throw DomainError("projective horizon fu + g = 0");
    const Vec qb = (A * q + b * u + c) / w;
    std::vector<double> out(qb.data(), qb.data() + k);
    out.push_back((d * u + e) / w);
    out.push_back(v + v_shift(q, u));
    return out;
  }
};

/// (q̄, ū) = ((Aq + bu + c)/(fu + g), (du + e)/(fu + g)).
inline std::pair<Vec, double> projective_matrix_action(const SchrodingerGroupElement& el, const Vec& q, double u) {
  const double w = el.f * u + el.g;
  if (std::abs(w) < 1e-14) throw DomainError("projective horizon fu + g = 0");
  return {(el.A * q + el.b * u + el.c) / w, (el.d * u + el.e) / w};
}

namespace detail {

// Point where both the inner map and the composite are regular.
inline std::vector<double> regular_point(const SchrodingerGroupElement& inner, const SchrodingerGroupElement& outer) {
  const int k = inner.n();
  for (double u : {0.0, 0.37, -0.61, 1.3, -2.2, 3.7}) {
    std::vector<double> y(static_cast<std::size_t>(k + 2), 0.0);
    y[static_cast<std::size_t>(k)] = u;
    if (std::abs(inner.f * u + inner.g) < 1e-6) continue;
    const auto mid = inner.apply(y);
    if (std::abs(outer.f * mid[static_cast<std::size_t>(k)] + outer.g) < 1e-6) continue;
    return y;
  }
  throw DomainError("no regular point for the group composition");
}

}  // namespace detail

/// x·y acting as x∘y: matrix product, central parameter fixed so that the
/// full (q, u, v) maps compose.
inline SchrodingerGroupElement product(const SchrodingerGroupElement& x, const SchrodingerGroupElement& y) {
  x.validate();
  y.validate();
  if (x.n() != y.n()) throw PreconditionError("group elements of different dimension");
  SchrodingerGroupElement p = SchrodingerGroupElement::from_matrix(x.matrix() * y.matrix());
  const auto y0 = detail::regular_point(y, x);
  const auto composite = x.apply(y.apply(y0));
  const auto direct = p.apply(y0);
  p.h = composite.back() - direct.back();
  return p;
}

inline SchrodingerGroupElement inverse(const SchrodingerGroupElement& x) {
  x.validate();
  SchrodingerGroupElement inv = SchrodingerGroupElement::from_matrix(x.matrix().inverse());
  inv.A = x.A.transpose();
  const auto y0 = detail::regular_point(x, inv);
  const auto back = inv.apply(x.apply(y0));
  inv.h = y0.back() - back.back();
  return inv;
}

// ------------------------------------------------------------ named maps

/// Parameters of the named catalog maps.
///   dark_energy, em_field: phi (one-variable field ū = φ(u)), phi_sign
///     (declared sgn φ′ on the working region; 0 reads it at u = 0), h
///     (constant kinetic metric for em_field; empty means identity);
///   dirac_gravity: a, b, c, d;
///   schrodinger_group: group.
struct MapParams {
  int n = 1;
  ScalarField phi = ScalarField::coordinate(1, 0);
  int phi_sign = 0;
  Mat h;
  double a = 1.0, b = 0.0, c = 0.0, d = 0.0;
  SchrodingerGroupElement group;
};

inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names{"dark_energy", "em_field", "dirac_gravity", "schrodinger_group"};
  return names;
}

namespace detail {

struct TimeMapFields {
  ScalarField phi, d1, d2, d3, abs_d1, schwarzian;
  int sign = 1;
};

inline int time_map_sign(const MapParams& p) {
  if (p.phi.arity() != 1) throw PreconditionError("phi must be a field of one variable");
  if (p.phi_sign == 1 || p.phi_sign == -1) return p.phi_sign;
  if (p.phi_sign != 0) throw PreconditionError("phi_sign must be -1, 0 or +1");
  const double d = p.phi.derivative({0.0}, {0});
  if (!std::isfinite(d) || d == 0.0) throw DomainError("phi' vanishes at u = 0; declare phi_sign");
  return d > 0 ? 1 : -1;
}

inline TimeMapFields time_map_fields(const MapParams& p, int N, int u) {
  TimeMapFields t;
  t.sign = time_map_sign(p);
  const std::vector<int> map{u};
  t.phi = p.phi.remap(N, map);
  const ScalarField p1 = p.phi.partial(0), p2 = p1.partial(0), p3 = p2.partial(0);
  t.d1 = p1.remap(N, map);
  t.d2 = p2.remap(N, map);
  t.d3 = p3.remap(N, map);
  t.abs_d1 = require_positive(static_cast<double>(t.sign) * t.d1);
  t.schwarzian = t.d3 / t.d1 - 1.5 * pow(t.d2 / t.d1, 2.0);
  return t;
}

inline Mat kinetic_matrix(const MapParams& p) {
  if (p.h.size() == 0) return Mat::Identity(p.n, p.n);
  if (p.h.rows() != p.n || p.h.cols() != p.n) throw PreconditionError("h must be n x n");
  if ((p.h - p.h.transpose()).cwiseAbs().maxCoeff() > 0.0) throw PreconditionError("h must be symmetric");
  return p.h;
}

// q·h·q as a field on the (q, u, v) chart.
inline ScalarField quadratic_form(const Mat& h, int n, int N) {
  ScalarField s = ScalarField::constant(N, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (h(i, j) != 0.0) s = s + h(i, j) * ScalarField::coordinate(N, i) * ScalarField::coordinate(N, j);
  return s;
}

inline DualityMap schrodinger_map(const SchrodingerGroupElement& el) {
  el.validate();
  const int n = el.n(), N = n + 2;
  const auto forward_fields = [&](const SchrodingerGroupElement& x) {
    std::vector<ScalarField> out;
    const ScalarField u = ScalarField::coordinate(N, n), v = ScalarField::coordinate(N, n + 1);
    const ScalarField w = x.f * u + x.g;
    std::vector<ScalarField> Q, Aq;
    for (int i = 0; i < n; ++i) {
      ScalarField s = x.b(i) * u + x.c(i);
      ScalarField a = ScalarField::constant(N, 0.0);
      for (int j = 0; j < n; ++j)
        if (x.A(i, j) != 0.0) a = a + x.A(i, j) * ScalarField::coordinate(N, j);
      Aq.push_back(a);
      Q.push_back(a + s);
    }
    ScalarField Q2 = ScalarField::constant(N, 0.0), bAq = ScalarField::constant(N, 0.0);
    for (int i = 0; i < n; ++i) {
      out.push_back(Q[static_cast<std::size_t>(i)] / w);
      Q2 = Q2 + Q[static_cast<std::size_t>(i)] * Q[static_cast<std::size_t>(i)];
      if (x.b(i) != 0.0) bAq = bAq + x.b(i) * Aq[static_cast<std::size_t>(i)];
    }
    out.push_back((x.d * u + x.e) / w);
    out.push_back(v + 0.5 * x.f * Q2 / w - bAq - 0.5 * x.b.squaredNorm() * u + x.h);
    return out;
  };
  return DualityMap("schrodinger_group", forward_fields(el), forward_fields(inverse(el)), 1.0, true);
}

}  // namespace detail

/// Catalog map on the chart (q¹..qⁿ, u, v) with analytic Jacobian.
inline DualityMap build_named_map(const std::string& name, const MapParams& p) {
  if (p.n < 1) throw PreconditionError("n must be >= 1");
  const int n = p.n, N = n + 2;
  const ScalarField u = ScalarField::coordinate(N, n), v = ScalarField::coordinate(N, n + 1);
  if (name == "dark_energy" || name == "em_field") {
    const auto t = detail::time_map_fields(p, N, n);
    const Mat h = name == "em_field" ? detail::kinetic_matrix(p) : Mat::Identity(n, n);
    const ScalarField rho = sqrt(t.abs_d1);
    std::vector<ScalarField> fwd;
    for (int i = 0; i < n; ++i) fwd.push_back(rho * ScalarField::coordinate(N, i));
    fwd.push_back(t.phi);
    fwd.push_back(static_cast<double>(t.sign) * (v - 0.25 * (t.d2 / t.d1) * detail::quadratic_form(h, n, N)));
    return DualityMap(name, fwd, std::nullopt, static_cast<double>(t.sign), true);
  }
  if (name == "dirac_gravity") {
    if (p.a == 0.0) throw PreconditionError("dirac_gravity needs a != 0");
    const ScalarField ub = u + p.b;
    const ScalarField Omega = p.a / ub;
    std::vector<ScalarField> fwd;
    ScalarField q2 = ScalarField::constant(N, 0.0);
    for (int i = 0; i < n; ++i) {
      const ScalarField qi = ScalarField::coordinate(N, i);
      fwd.push_back(Omega * qi);
      q2 = q2 + qi * qi;
    }
    fwd.push_back(-p.a * p.a / ub + p.c);
    fwd.push_back(v + q2 / (2.0 * ub) + p.d);
    // inverse: u = −a²/(ū − c) − b, q = q̄/Ω(u) with Ω(u) = −(ū − c)/a
    const ScalarField ubar = ScalarField::coordinate(N, n), vbar = ScalarField::coordinate(N, n + 1);
    const ScalarField uc = ubar - p.c;
    const ScalarField Om = -uc / p.a;
    const ScalarField u_of = -p.a * p.a / uc - p.b;
    std::vector<ScalarField> inv;
    ScalarField qq = ScalarField::constant(N, 0.0);
    for (int i = 0; i < n; ++i) {
      const ScalarField qi = ScalarField::coordinate(N, i) / Om;
      inv.push_back(qi);
      qq = qq + qi * qi;
    }
    inv.push_back(u_of);
    inv.push_back(vbar - qq / (2.0 * (u_of + p.b)) - p.d);
    return DualityMap(name, fwd, inv, 1.0, true);
  }
  if (name == "schrodinger_group") {
    if (p.group.n() != n) throw PreconditionError("group element dimension does not match n");
    return detail::schrodinger_map(p.group);
  }
  throw PreconditionError("unknown catalog map '" + name + "'");
}

/// Closed-form dual data (Ω², h, V, A) on the source chart (q, u, v) for a
/// catalog map applied to the target system (fields over (q̄, ū)).
inline EDExtraction predicted_dual_fields(const std::string& name, const MapParams& p, const NaturalSystem& target) {
  target.validate();
  if (target.n != p.n) throw PreconditionError("target dimension does not match map parameters");
  const int n = p.n, N = n + 2;
  const DualityMap f = build_named_map(name, p);
  const std::vector<ScalarField> args(f.forward().begin(), f.forward().begin() + n + 1);
  const auto on_target = [&](const ScalarField& x) { return x.is_constant() ? ScalarField::constant(N, *x.constant_value()) : compose(x, args); };
  const auto require_h = [&](const Mat& h) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const auto& e = target.h(i, j);
        if (!e.is_constant() || std::abs(*e.constant_value() - h(i, j)) > 1e-15)
          throw PreconditionError(name + " requires the target kinetic metric to be the constant h");
      }
  };
  const auto require_no_A = [&]() {
    if (target.has_vector_potential()) throw PreconditionError(name + " requires a target without vector potential");
  };
  const double e2 = target.e * target.e;
  const ScalarField Vbar = on_target(e2 * target.V);
  std::vector<ScalarField> Abar;
  for (int i = 0; i < n; ++i) Abar.push_back(on_target(target.e * target.A_component(i)));

  EDExtraction out;
  out.h = MatrixField(n, N);
  out.A.assign(static_cast<std::size_t>(n), ScalarField::constant(N, 0.0));
  const auto set_h = [&](const Mat& h) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) out.h.set(i, j, ScalarField::constant(N, h(i, j)));
  };
  if (name == "dark_energy" || name == "em_field") {
    const auto t = detail::time_map_fields(p, N, n);
    const Mat h = name == "em_field" ? detail::kinetic_matrix(p) : Mat::Identity(n, n);
    require_h(h);
    if (name == "dark_energy") require_no_A();
    set_h(h);
    out.Omega2 = t.abs_d1;
    ScalarField V = t.abs_d1 * Vbar + 0.25 * t.schwarzian * detail::quadratic_form(h, n, N);
    if (target.has_vector_potential()) {
      ScalarField qA = ScalarField::constant(N, 0.0);
      for (int i = 0; i < n; ++i) qA = qA + f.forward()[static_cast<std::size_t>(i)] * Abar[static_cast<std::size_t>(i)];
      V = V - t.d2 / (2.0 * t.abs_d1) * qA;
      for (int i = 0; i < n; ++i)
        out.A[static_cast<std::size_t>(i)] = static_cast<double>(t.sign) * sqrt(t.abs_d1) * Abar[static_cast<std::size_t>(i)];
    }
    out.V = V;
  } else if (name == "dirac_gravity") {
    require_h(Mat::Identity(n, n));
    set_h(Mat::Identity(n, n));
    const ScalarField ub = ScalarField::coordinate(N, n) + p.b;
    const ScalarField Omega = p.a / ub;
    const ScalarField drho = -p.a / (ub * ub);
    out.Omega2 = Omega * Omega;
    ScalarField V = out.Omega2 * Vbar;
    for (int i = 0; i < n; ++i) {
      if (Abar[static_cast<std::size_t>(i)].is_zero()) continue;
      V = V - drho * ScalarField::coordinate(N, i) * Abar[static_cast<std::size_t>(i)];
      out.A[static_cast<std::size_t>(i)] = Omega * Abar[static_cast<std::size_t>(i)];
    }
    out.V = V;
  } else if (name == "schrodinger_group") {
    require_h(Mat::Identity(n, n));
    require_no_A();
    if (!target.V.is_zero()) throw PreconditionError("schrodinger_group acts on the free (flat) lift");
    set_h(Mat::Identity(n, n));
    const ScalarField w = p.group.f * ScalarField::coordinate(N, n) + p.group.g;
    out.Omega2 = 1.0 / (w * w);
    out.V = ScalarField::constant(N, 0.0);
  } else {
    throw PreconditionError("unknown catalog map '" + name + "'");
  }
  return out;
}

/// ¼ S(φ) q·h·q: the term a time reparameterization adds to the potential.
inline ScalarField cosmological_term(const MapParams& p) {
  const int N = p.n + 2;
  const auto t = detail::time_map_fields(p, N, p.n);
  return 0.25 * t.schwarzian * detail::quadratic_form(detail::kinetic_matrix(p), p.n, N);
}

/// Kepler with time-dependent coupling: V̄ = −G(ū)M/|q̄| where the dirac map
/// carries it to constant G₀, G(ū) = G₀|a|/|ū − c|.
inline NaturalSystem dirac_time_dependent_kepler(int n, double G0, double M, double a, double c) {
  NaturalSystem s;
  s.n = n;
  s.name = "kepler with G(u)";
  const int K = n + 1;
  s.h = MatrixField::identity(n, K);
  ScalarField r2 = ScalarField::constant(K, 0.0);
  for (int i = 0; i < n; ++i) r2 = r2 + pow(ScalarField::coordinate(K, i), 2.0);
  const ScalarField G = G0 * std::abs(a) / abs(ScalarField::coordinate(K, n) - c);
  s.V = -G * M / sqrt(r2);
  return s;
}

}  // namespace nullift

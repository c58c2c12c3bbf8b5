#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/geometry/metric.hpp"
#include "nullift/lifts/lift.hpp"
#include "nullift/lifts/natural_system.hpp"

namespace nullift {

// ---------------------------------------------------------------- Jacobi

/// Jacobi metric 2(E − V) h_ij on the base (fields of q). Its geodesics with
/// affine parameter s are the energy-E orbits; dt = ds / (2(E − V)), and the
/// Jacobi time T with dT/dt = E − V equals s/2.
struct JacobiSystem {
  Metric metric;
  ScalarField factor;  // 2(E − V), guarded positive
  double E = 0.0;
  int n = 1;

  /// Ω with Ω² = dt/ds, for reparameterize().
  ScalarField time_factor() const { return 1.0 / sqrt(factor); }

  /// 𝓗̄ = ½ h^{ij} p_i p_j / (E − V) − 1 (twice the geodesic Hamiltonian, minus one).
  double hamiltonian(std::span<const double> q, std::span<const double> p) const {
    PhasePoint pt{{q.begin(), q.end()}, {p.begin(), p.end()}};
    return 2.0 * hamiltonian_value(metric, pt) - 1.0;
  }
};

inline JacobiSystem jacobi_system(const NaturalSystem& s, double E) {
  s.validate();
  detail::require_static(s, "jacobi_system");
  if (s.has_vector_potential()) throw PreconditionError("jacobi_system requires A = 0");
  const int n = s.n;
  JacobiSystem J;
  J.E = E;
  J.n = n;
  J.factor = require_positive(2.0 * (E - s.e * s.e * detail::drop_time(s.V, n)));
  MatrixField g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const ScalarField hij = detail::drop_time(s.h(i, j), n);
      if (!hij.is_zero()) g.set(i, j, J.factor * hij);
    }
  J.metric = Metric(std::move(g));
  return J;
}

// ---------------------------------------------------- coupling-constant metamorphosis

/// H = H₀ − g F at fixed energy h, and its dual G = (H₀ − h)/F at value g.
/// G is natural with kinetic metric F h_ij and potential (V − h)/F; the two
/// flows share orbits with dT = F dt.
struct CcmDual {
  NaturalSystem H0;
  NaturalSystem G;
  ScalarField F;  // over (q, u), independent of u
  double g = 1.0;
  double h = 0.0;

  /// H = H₀ − g F as a natural system.
  NaturalSystem H() const {
    NaturalSystem s = H0;
    s.V = H0.V - (g / (H0.e * H0.e)) * F;
    s.name = "H0 - g F";
    return s;
  }
};

inline CcmDual ccm_dual(const NaturalSystem& H0, const ScalarField& F, double g, double h) {
  H0.validate();
  detail::require_static(H0, "ccm_dual");
  if (H0.has_vector_potential()) throw PreconditionError("ccm_dual requires A = 0");
  if (F.arity() != H0.arity()) throw PreconditionError("F must be a field over (q, u)");
  if (F.dependencies().count(H0.n)) throw PreconditionError("F must not depend on time");
  CcmDual d;
  d.H0 = H0;
  d.F = require_positive(F);
  d.g = g;
  d.h = h;
  NaturalSystem G;
  G.n = H0.n;
  G.e = 1.0;
  G.name = "ccm dual of " + H0.name;
  G.h = MatrixField(H0.n, H0.arity());
  for (int i = 0; i < H0.n; ++i)
    for (int j = i; j < H0.n; ++j)
      if (!H0.h(i, j).is_zero()) G.h.set(i, j, d.F * H0.h(i, j));
  G.V = (H0.e * H0.e * H0.V - h) / d.F;
  d.G = std::move(G);
  return d;
}

namespace detail {

inline LiftedSystem ccm_lift_from_parts(int n, const MatrixField& kin, const ScalarField& Vy, const ScalarField& Fw,
                                        const ScalarField& Fz, double g, int signH, LiftKind kind, std::string description) {
  const int N = n + 3;
  const int y = n, w = n + 1, z = n + 2;
  const auto up = [&](const ScalarField& f) { return drop_time(f, n).remap(N, identity_map(n)); };
  MatrixField m(N, N);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      if (!kin(i, j).is_zero()) m.set(i, j, up(kin(i, j)));
  m.set(y, y, 1.0 / (2.0 * up(Vy)));
  m.set(w, w, -1.0 / (2.0 * up(Fw)));
  m.set(z, z, -0.5 * signH / up(Fz));
  LiftedSystem L;
  L.metric = Metric(std::move(m));
  L.kind = kind;
  L.n = n;
  L.fixed_momenta = {{y, 1.0}, {w, std::sqrt(g)}};
  L.solve_index = z;
  L.root_guess = 1.0;
  L.time = {-1, 1.0, 1.0};
  L.momentum_sign = 1.0;
  L.energy = [signH, z](const PhasePoint& pt) { return signH * pt.p[static_cast<std::size_t>(z)] * pt.p[static_cast<std::size_t>(z)]; };
  L.description = std::move(description);
  return L;
}

inline void check_ccm(const NaturalSystem& H0, double g, int signH) {
  if (signH != 1 && signH != -1) throw PreconditionError("sgn(H) must be +1 or -1");
  if (!(g > 0.0)) throw PreconditionError("coupling g must be positive");
  if (H0.V.is_zero()) throw PreconditionError("ccm lift is degenerate for V = 0 (g_yy = 1/(2V)); shift V by a constant");
}

}  // namespace detail

/// 𝓗 = ½h^{ij}p_ip_j + V p_y² − F p_w² − sgn(H) p_z² on (q, y, w, z) with
/// p_y² = 1, p_w² = g. On the null cone H₀ − gF = sgn(H) p_z².
inline LiftedSystem ccm_lift(const NaturalSystem& H0, const ScalarField& F, double g, int signH) {
  const CcmDual d = ccm_dual(H0, F, g, 0.0);
  detail::check_ccm(H0, g, signH);
  const ScalarField one = ScalarField::constant(H0.arity(), 1.0);
  return detail::ccm_lift_from_parts(H0.n, H0.h, H0.e * H0.e * H0.V, d.F, one, g, signH, LiftKind::kCcm,
                                     "ccm lift of " + H0.name);
}

/// Lift of the dual G in the same coordinates: F h_ij, F/(2V), −½, −F sgn/2.
/// Equals F times the ccm_lift metric.
inline LiftedSystem ccm_dual_lift(const CcmDual& d, int signH) {
  detail::check_ccm(d.H0, d.g, signH);
  const ScalarField one = ScalarField::constant(d.H0.arity(), 1.0);
  return detail::ccm_lift_from_parts(d.H0.n, d.G.h, d.H0.e * d.H0.e * d.H0.V / d.F, one, 1.0 / d.F, d.g, signH, LiftKind::kCcm,
                                     "lift of the ccm dual " + d.G.name);
}

}  // namespace nullift

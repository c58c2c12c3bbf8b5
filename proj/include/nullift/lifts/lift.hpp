#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nullift/dynamics/curves.hpp"
#include "nullift/dynamics/integrator.hpp"
#include "nullift/dynamics/phase.hpp"
#include "nullift/errors.hpp"
#include "nullift/geometry/metric.hpp"
#include "nullift/lifts/natural_system.hpp"

namespace nullift {

enum class LiftKind { kEisenhartDuval, kSignedClock, kMultiPotential, kCcm };

inline const char* to_string(LiftKind k) {
  switch (k) {
    case LiftKind::kEisenhartDuval: return "eisenhart-duval";
    case LiftKind::kSignedClock: return "signed-clock";
    case LiftKind::kMultiPotential: return "multi-potential";
    case LiftKind::kCcm: return "ccm";
  }
  return "?";
}

/// Base time from a lifted sample: t = factor * y[coordinate] when
/// coordinate >= 0, else t = factor * λ (+ t0 supplied at reduction).
/// `rate` is dt/dλ along null geodesics satisfying the reduction.
struct TimeRule {
  int coordinate = -1;
  double factor = 1.0;
  double rate = 1.0;
};

/// Axis-aligned box in q on which a lift's preconditions are checked.
struct Region {
  std::vector<double> lower;
  std::vector<double> upper;
  int samples_per_axis = 9;

  bool contains(std::span<const double> q) const {
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (q[i] < lower[i] || q[i] > upper[i]) return false;
    return true;
  }

  /// Tensor grid of sample points (including the corners).
  std::vector<std::vector<double>> grid() const {
    if (lower.size() != upper.size() || lower.empty()) throw PreconditionError("region bounds must be nonempty and matching");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] <= upper[i])) throw PreconditionError("region lower bound exceeds upper bound");
    const int m = std::max(2, samples_per_axis);
    std::vector<std::vector<double>> pts{{}};
    for (std::size_t i = 0; i < lower.size(); ++i) {
      std::vector<std::vector<double>> next;
      for (const auto& p : pts)
        for (int k = 0; k < m; ++k) {
          auto q = p;
          q.push_back(lower[i] + (upper[i] - lower[i]) * k / (m - 1));
          next.push_back(std::move(q));
        }
      pts = std::move(next);
    }
    return pts;
  }
};

/// Null lift of a base system together with the data that projects its null
/// geodesics back down: which momenta are fixed, which momentum is solved
/// from 𝓗 = 0, how base time and base momenta are read off.
struct LiftedSystem {
  Metric metric;
  LiftKind kind = LiftKind::kEisenhartDuval;
  int n = 1;
  std::vector<std::pair<int, double>> fixed_momenta;
  int solve_index = -1;
  std::optional<double> root_guess;
  TimeRule time;
  double momentum_sign = -1.0;  // base p_i = momentum_sign * P_i
  std::function<double(const PhasePoint&)> energy;
  std::string description;

  int dim() const { return metric.dim(); }
};

namespace detail {

inline std::vector<int> identity_map(int k) {
  std::vector<int> m(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) m[static_cast<std::size_t>(i)] = i;
  return m;
}

// Field over (q, u) viewed on a chart of dimension `dim` whose first n
// coordinates are q and whose u sits at `u_index`.
inline ScalarField lift_field(const ScalarField& f, int n, int dim, int u_index) {
  auto map = identity_map(n);
  map.push_back(u_index);
  return f.remap(dim, map);
}

// Field over (q, u) known not to depend on u, viewed over q only.
inline ScalarField drop_time(const ScalarField& f, int n) {
  if (f.dependencies().count(n)) throw PreconditionError("field must not depend on time");
  auto map = identity_map(n);
  map.push_back(0);
  return f.remap(n, map);
}

inline void require_static(const NaturalSystem& s, const char* who) {
  if (s.time_dependent()) throw PreconditionError(std::string(who) + " requires time-independent fields");
}

}  // namespace detail

/// ds² = h_ij dq^i dq^j + 2du(dv − V du + A_i dq^i) on (q¹..qⁿ, u, v);
/// p_v = e, t = −u/e, base p = −P.
inline LiftedSystem eisenhart_duval_lift(const NaturalSystem& s) {
  s.validate();
  const int n = s.n, N = n + 2;
  MatrixField g(N, N);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) g.set(i, j, detail::lift_field(s.h(i, j), n, N, n));
    const ScalarField a = s.A_component(i);
    if (!a.is_zero()) g.set(i, n, detail::lift_field(a, n, N, n));
  }
  if (!s.V.is_zero()) g.set(n, n, -2.0 * detail::lift_field(s.V, n, N, n));
  g.set(n, n + 1, ScalarField::constant(N, 1.0));
  LiftedSystem L;
  L.metric = Metric(std::move(g));
  L.kind = LiftKind::kEisenhartDuval;
  L.n = n;
  L.fixed_momenta = {{n + 1, s.e}};
  L.solve_index = n;
  L.time = {n, -1.0 / s.e, -1.0};
  L.momentum_sign = -1.0;
  const double e = s.e;
  L.energy = [e, n](const PhasePoint& pt) { return -e * pt.p[static_cast<std::size_t>(n)]; };
  L.description = "Eisenhart-Duval lift of " + s.name;
  return L;
}

/// 𝓗 = ½h^{ij}(p_i + p_v A_i)(p_j + p_v A_j) + p_v² V + sign·p_T² on
/// (q¹..qⁿ, T, v). Needs time-independent fields and V of fixed sign, bounded
/// away from zero on `region`. Reduction: p_v = e, t = λ, p_T² = sign·(−H).
inline LiftedSystem signed_clock_lift(const NaturalSystem& s, int sign, const Region& region) {
  s.validate();
  detail::require_static(s, "signed_clock_lift");
  if (sign != 1 && sign != -1) throw PreconditionError("clock sign must be +1 or -1");
  const int n = s.n, N = n + 2;
  if (static_cast<int>(region.lower.size()) != n) throw PreconditionError("region dimension must equal n");
  const ScalarField Vq = detail::drop_time(s.V, n);
  double vmin = std::numeric_limits<double>::infinity();
  int signs = 0;
  for (const auto& q : region.grid()) {
    const double v = Vq(q);
    if (!std::isfinite(v)) throw DomainError("potential is not finite on the working region");
    vmin = std::min(vmin, std::abs(v));
    signs |= v > 0 ? 1 : (v < 0 ? 2 : 4);
  }
  if (signs != 1 && signs != 2) throw DomainError("potential vanishes or changes sign on the working region");
  if (vmin < 1e-12) throw DomainError("potential is not bounded away from zero on the working region");

  const int T = n, v = n + 1;
  const ScalarField V = Vq.remap(N, detail::identity_map(n));
  const ScalarField twoV = 2.0 * V;
  MatrixField g(N, N);
  for (int i = 0; i < n; ++i) {
    const ScalarField Ai = detail::drop_time(s.A_component(i), n).remap(N, detail::identity_map(n));
    for (int j = i; j < n; ++j) {
      const ScalarField hij = detail::drop_time(s.h(i, j), n).remap(N, detail::identity_map(n));
      const ScalarField Aj = detail::drop_time(s.A_component(j), n).remap(N, detail::identity_map(n));
      g.set(i, j, (Ai.is_zero() || Aj.is_zero()) ? hij : hij + Ai * Aj / twoV);
    }
    if (!Ai.is_zero()) g.set(i, v, -Ai / twoV);
  }
  g.set(v, v, 1.0 / twoV);
  g.set(T, T, ScalarField::constant(N, 0.5 * sign));
  LiftedSystem L;
  L.metric = Metric(std::move(g));
  L.kind = LiftKind::kSignedClock;
  L.n = n;
  L.fixed_momenta = {{v, s.e}};
  L.solve_index = T;
  L.root_guess = 1.0;
  L.time = {-1, 1.0, 1.0};
  L.momentum_sign = 1.0;
  L.energy = [sign, T](const PhasePoint& pt) { return -sign * pt.p[static_cast<std::size_t>(T)] * pt.p[static_cast<std::size_t>(T)]; };
  L.description = std::string("signed-clock lift (") + (sign > 0 ? "+" : "-") + ") of " + s.name;
  return L;
}

/// One (u_k, v_k) plane per potential: g_{u_k u_k} = −2V_k, g_{u_k v_k} = 1,
/// on (q¹..qⁿ, u₁, v₁, u₂, v₂, ...). h and V_k are fields of q only.
/// Reduction: p_{v_k} = e_k, p_{u_k} = 0 for k ≥ 2, t = −u₁/e₁, base p = −P.
inline LiftedSystem multi_potential_lift(const MatrixField& h, const std::vector<ScalarField>& potentials,
                                         std::vector<double> couplings = {}) {
  const int n = h.dim();
  const int k = static_cast<int>(potentials.size());
  if (k < 2) throw PreconditionError("multi_potential_lift needs at least two potentials");
  if (h.arity() != n) throw PreconditionError("kinetic metric must be a field of q only");
  if (couplings.empty()) couplings.assign(static_cast<std::size_t>(k), 1.0);
  if (static_cast<int>(couplings.size()) != k) throw PreconditionError("one coupling per potential");
  for (double e : couplings)
    if (e == 0.0) throw PreconditionError("couplings must be nonzero");
  const int N = n + 2 * k;
  const auto up = [&](const ScalarField& f) {
    if (f.arity() != n) throw PreconditionError("potentials must be fields of q only");
    return f.remap(N, detail::identity_map(n));
  };
  MatrixField g(N, N);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) g.set(i, j, up(h(i, j)));
  for (int m = 0; m < k; ++m) {
    const int u = n + 2 * m;
    const ScalarField Vm = up(potentials[static_cast<std::size_t>(m)]);
    if (!Vm.is_zero()) g.set(u, u, -2.0 * Vm);
    g.set(u, u + 1, ScalarField::constant(N, 1.0));
  }
  LiftedSystem L;
  L.metric = Metric(std::move(g));
  L.kind = LiftKind::kMultiPotential;
  L.n = n;
  for (int m = 0; m < k; ++m) {
    L.fixed_momenta.emplace_back(n + 2 * m + 1, couplings[static_cast<std::size_t>(m)]);
    if (m > 0) L.fixed_momenta.emplace_back(n + 2 * m, 0.0);
  }
  L.solve_index = n;
  L.time = {n, -1.0 / couplings[0], -1.0};
  L.momentum_sign = -1.0;
  L.energy = [couplings, n](const PhasePoint& pt) {
    double E = 0.0;
    for (std::size_t m = 0; m < couplings.size(); ++m) E -= couplings[m] * pt.p[static_cast<std::size_t>(n) + 2 * m];
    return E;
  };
  L.description = "multi-potential lift with " + std::to_string(k) + " potentials";
  return L;
}

/// Natural system equivalent to a multi-potential lift: V = Σ e_k² V_k, e = 1.
inline NaturalSystem multi_potential_base(const MatrixField& h, const std::vector<ScalarField>& potentials,
                                          std::vector<double> couplings = {}) {
  const int n = h.dim();
  if (couplings.empty()) couplings.assign(potentials.size(), 1.0);
  NaturalSystem s;
  s.n = n;
  s.name = "multi-potential base";
  std::vector<int> map = detail::identity_map(n);
  s.h = MatrixField(n, n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) s.h.set(i, j, h(i, j).remap(n + 1, map));
  ScalarField V = ScalarField::constant(n + 1, 0.0);
  for (std::size_t m = 0; m < potentials.size(); ++m)
    V = V + couplings[m] * couplings[m] * potentials[m].remap(n + 1, map);
  s.V = V;
  return s;
}

/// Null data over the base point (q0, p0) at base time t0. Fixed momenta are
/// set, the designated momentum is solved from 𝓗 = 0.
inline PhasePoint lift_initial_data(const LiftedSystem& L, std::span<const double> q0, std::span<const double> p0, double t0 = 0.0) {
  if (static_cast<int>(q0.size()) != L.n || static_cast<int>(p0.size()) != L.n) throw PreconditionError("initial data must have n components");
  PhasePoint pt;
  pt.y.assign(static_cast<std::size_t>(L.dim()), 0.0);
  pt.p.assign(static_cast<std::size_t>(L.dim()), 0.0);
  for (int i = 0; i < L.n; ++i) {
    pt.y[static_cast<std::size_t>(i)] = q0[static_cast<std::size_t>(i)];
    pt.p[static_cast<std::size_t>(i)] = L.momentum_sign * p0[static_cast<std::size_t>(i)];
  }
  if (L.time.coordinate >= 0) pt.y[static_cast<std::size_t>(L.time.coordinate)] = t0 / L.time.factor;
  for (const auto& [idx, val] : L.fixed_momenta) pt.p[static_cast<std::size_t>(idx)] = val;
  pt.p = null_initial_momentum(L.metric, pt.y, pt.p, L.solve_index, L.root_guess);
  return pt;
}

/// Integrator settings that keep the lift on the null cone by re-solving its
/// designated momentum.
inline IntegratorConfig lift_integrator_config(const LiftedSystem& L, double lambda_end, bool projection = true) {
  IntegratorConfig cfg;
  cfg.lambda_end = lambda_end;
  cfg.null_projection = projection;
  cfg.projection_index = L.solve_index;
  for (const auto& fm : L.fixed_momenta) cfg.monitored_momenta.push_back(fm.first);
  return cfg;
}

/// λ range that covers base time [t0, t0 + duration].
inline double lambda_for_duration(const LiftedSystem& L, double duration) {
  return duration / L.time.rate;
}

struct BaseState {
  double t = 0.0;
  std::vector<double> q;
  std::vector<double> p;
  double energy = 0.0;
};

struct BaseTrajectory {
  std::vector<double> t;
  Polyline q;
  Polyline p;
  std::vector<double> energy;

  std::size_t size() const { return t.size(); }

  /// (t, q¹..qⁿ) as a polyline.
  Polyline tq_curve() const {
    Polyline out;
    for (std::size_t k = 0; k < t.size(); ++k) {
      std::vector<double> v{t[k]};
      v.insert(v.end(), q[k].begin(), q[k].end());
      out.push_back(std::move(v));
    }
    return out;
  }
};

inline BaseState reduce_point(const LiftedSystem& L, double lambda, const PhasePoint& pt, double t0 = 0.0) {
  BaseState b;
  b.t = L.time.coordinate >= 0 ? L.time.factor * pt.y[static_cast<std::size_t>(L.time.coordinate)] : L.time.factor * lambda + t0;
  b.q.assign(pt.y.begin(), pt.y.begin() + L.n);
  b.p.resize(static_cast<std::size_t>(L.n));
  for (int i = 0; i < L.n; ++i) b.p[static_cast<std::size_t>(i)] = L.momentum_sign * pt.p[static_cast<std::size_t>(i)];
  b.energy = L.energy ? L.energy(pt) : 0.0;
  return b;
}

/// Project a lifted null geodesic to base dynamics. Fixed momenta must hold
/// to `fixed_tol`; base time must be strictly monotone.
inline BaseTrajectory reduce_trajectory(const Trajectory& traj, const LiftedSystem& L, double t0 = 0.0, double fixed_tol = 1e-8) {
  if (traj.dim() != L.dim()) throw PreconditionError("trajectory dimension does not match lift");
  BaseTrajectory out;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const PhasePoint& pt = traj.points[k];
    for (const auto& [idx, val] : L.fixed_momenta) {
      const double d = std::abs(pt.p[static_cast<std::size_t>(idx)] - val);
      if (!(d <= fixed_tol)) {
        throw ConstraintViolation("fixed momentum p[" + std::to_string(idx + 1) + "] drifted by " + std::to_string(d) + " at sample " +
                                  std::to_string(k));
      }
    }
    BaseState b = reduce_point(L, traj.lambda[k], pt, t0);
    out.t.push_back(b.t);
    out.q.push_back(std::move(b.q));
    out.p.push_back(std::move(b.p));
    out.energy.push_back(b.energy);
  }
  if (out.t.size() > 1) {
    const bool inc = out.t[1] > out.t[0];
    for (std::size_t k = 1; k < out.t.size(); ++k)
      if (inc ? !(out.t[k] > out.t[k - 1]) : !(out.t[k] < out.t[k - 1]))
        throw ConstraintViolation("base time is not strictly monotone along the trajectory");
  }
  return out;
}

/// Base state at base time t from the dense output of a lifted trajectory.
inline BaseState base_state_at(const Trajectory& traj, const LiftedSystem& L, double t, double t0 = 0.0) {
  double lambda;
  if (L.time.coordinate < 0) {
    lambda = (t - t0) / L.time.factor;
  } else {
    // t is affine in λ for ED-type lifts: u = u0 + e λ
    const double ta = L.time.factor * traj.points.front().y[static_cast<std::size_t>(L.time.coordinate)];
    const double tb = L.time.factor * traj.points.back().y[static_cast<std::size_t>(L.time.coordinate)];
    const double la = traj.lambda.front(), lb = traj.lambda.back();
    if (tb == ta) throw PreconditionError("base time does not advance along the trajectory");
    lambda = la + (t - ta) * (lb - la) / (tb - ta);
  }
  return reduce_point(L, lambda, traj.state_at(lambda), t0);
}

}  // namespace nullift

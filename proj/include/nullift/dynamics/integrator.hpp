#pragma once

// Dormand-Prince 5(4) with Hairer's continuous extension (order 4 dense
// output) for Hamilton's equations of 𝓗 = ½ g^{AB} p_A p_B:
//   dy/dλ = g⁻¹p,   dp_B/dλ = ½ ẏᵀ (∂_B g) ẏ.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/dynamics/phase.hpp"
#include "nullift/geometry/metric.hpp"

namespace nullift {

struct IntegratorConfig {
  double rel_tol = 1e-11;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0;  // 0: automatic
  double lambda_end = 10.0;   // may be negative: integrate backwards
  bool null_projection = false;
  double null_tol = 1e-8;
  int projection_index = -1;  // momentum re-solved by the projection
  long max_steps = 2000000;
  std::vector<int> monitored_momenta;  // drift reported in diagnostics
};

struct TrajectoryDiagnostics {
  double max_abs_h = 0.0;
  double max_constraint_drift = 0.0;
  long accepted_steps = 0;
  long rejected_steps = 0;
  long rhs_evaluations = 0;
  long projections = 0;
  bool null_violation = false;  // |𝓗| > null_tol at a stored sample
};

class Trajectory {
 public:
  std::vector<double> lambda;
  std::vector<PhasePoint> points;
  std::vector<double> h_values;  // 𝓗 at each sample
  TrajectoryDiagnostics diagnostics;

  std::size_t size() const { return points.size(); }
  int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().y.size()); }

  bool has_dense() const { return !dense_.empty(); }

  /// Dense-output state at parameter value `s` (in the current
  /// parameterization).
  PhasePoint state_at(double s) const {
    if (dense_.empty()) throw PreconditionError("trajectory has no dense output");
    const bool forward = lambda.back() >= lambda.front();
    const double lo = forward ? lambda.front() : lambda.back();
    const double hi = forward ? lambda.back() : lambda.front();
    const double span = hi - lo;
    if (s < lo - 1e-12 * (1.0 + span) || s > hi + 1e-12 * (1.0 + span)) {
      throw PreconditionError("state_at: parameter outside the trajectory");
    }
    std::size_t k;
    if (forward) {
      k = static_cast<std::size_t>(std::upper_bound(lambda.begin(), lambda.end(), s) - lambda.begin());
    } else {
      k = static_cast<std::size_t>(std::upper_bound(lambda.begin(), lambda.end(), s, std::greater<double>()) - lambda.begin());
    }
    k = std::clamp<std::size_t>(k == 0 ? 0 : k - 1, 0, dense_.size() - 1);
    const double t = original_parameter(k, s);
    return dense_[k].eval(t);
  }

  /// Reparameterized copy: `new_lambda` replaces the parameter, `slope`
  /// holds dλ̄/dλ at each sample (used to invert the map inside a step).
  Trajectory with_parameter(std::vector<double> new_lambda, std::vector<double> slope) const {
    Trajectory t = *this;
    t.lambda = std::move(new_lambda);
    t.slope_ = std::move(slope);
    if (t.original_lambda_.empty()) t.original_lambda_ = lambda;
    return t;
  }

  bool is_reparameterized() const { return !original_lambda_.empty(); }
  const std::vector<double>& integration_parameter() const { return original_lambda_.empty() ? lambda : original_lambda_; }

  struct DenseSegment {
    double lambda0 = 0.0;
    double h = 0.0;
    std::vector<double> r1, r2, r3, r4, r5;

    PhasePoint eval(double lam) const {
      const double th = (lam - lambda0) / h;
      const double th1 = 1.0 - th;
      const std::size_t m = r1.size();
      std::vector<double> z(m);
      for (std::size_t i = 0; i < m; ++i) z[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
      PhasePoint pt;
      pt.y.assign(z.begin(), z.begin() + static_cast<long>(m / 2));
      pt.p.assign(z.begin() + static_cast<long>(m / 2), z.end());
      return pt;
    }
  };

  std::vector<DenseSegment>& dense() { return dense_; }

 private:
  // Integration parameter λ inside segment k for current parameter s.
  double original_parameter(std::size_t k, double s) const {
    if (original_lambda_.empty()) return s;
    const double a0 = original_lambda_[k], a1 = original_lambda_[k + 1];
    const double b0 = lambda[k], b1 = lambda[k + 1];
    const double h = a1 - a0;
    const double m0 = slope_[k] * h, m1 = slope_[k + 1] * h;
    // cubic Hermite b(θ), solved for b(θ) = s by safeguarded Newton
    const auto B = [&](double th) {
      const double t2 = th * th, t3 = t2 * th;
      return (2 * t3 - 3 * t2 + 1) * b0 + (t3 - 2 * t2 + th) * m0 + (-2 * t3 + 3 * t2) * b1 + (t3 - t2) * m1;
    };
    const auto dB = [&](double th) {
      const double t2 = th * th;
      return (6 * t2 - 6 * th) * b0 + (3 * t2 - 4 * th + 1) * m0 + (-6 * t2 + 6 * th) * b1 + (3 * t2 - 2 * th) * m1;
    };
    double lo = 0.0, hi = 1.0;
    double th = (b1 != b0) ? std::clamp((s - b0) / (b1 - b0), 0.0, 1.0) : 0.0;
    const bool inc = b1 >= b0;
    for (int it = 0; it < 60; ++it) {
      const double f = B(th) - s;
      if (std::abs(f) <= 1e-15 * (1.0 + std::abs(s))) break;
      if ((f < 0) == inc) lo = th; else hi = th;
      const double d = dB(th);
      double next = d != 0.0 ? th - f / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      th = next;
    }
    return a0 + th * h;
  }

  std::vector<DenseSegment> dense_;
  std::vector<double> original_lambda_;
  std::vector<double> slope_;
};

namespace detail {

struct GeodesicRhs {
  const Metric& metric;
  long* counter;

  std::vector<double> operator()(const std::vector<double>& z) const {
    ++*counter;
    const int n = metric.dim();
    const std::span<const double> y(z.data(), static_cast<std::size_t>(n));
    const MetricJet j = metric.jet(y, 1);
    const Vec p = Eigen::Map<const Vec>(z.data() + n, n);
    const Vec yd = j.ginv * p;
    std::vector<double> out(static_cast<std::size_t>(2 * n));
    for (int a = 0; a < n; ++a) {
      out[static_cast<std::size_t>(a)] = yd(a);
      out[static_cast<std::size_t>(n + a)] = 0.5 * yd.dot(j.dg[static_cast<std::size_t>(a)] * yd);
    }
    return out;
  }
};

inline std::vector<double> pack(const PhasePoint& pt) {
  std::vector<double> z(pt.y);
  z.insert(z.end(), pt.p.begin(), pt.p.end());
  return z;
}

inline PhasePoint unpack(const std::vector<double>& z) {
  PhasePoint pt;
  const auto half = static_cast<long>(z.size() / 2);
  pt.y.assign(z.begin(), z.begin() + half);
  pt.p.assign(z.begin() + half, z.end());
  return pt;
}

}  // namespace detail

/// Adaptive integration of the geodesic Hamiltonian flow of `m` from pt0
/// over λ ∈ [0, cfg.lambda_end] (or [cfg.lambda_end, 0]).
inline Trajectory integrate_geodesic(const Metric& m, const PhasePoint& pt0, const IntegratorConfig& cfg) {
  if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0) || !(cfg.null_tol > 0.0)) {
    throw PreconditionError("integrator tolerances must be positive");
  }
  if (static_cast<int>(pt0.y.size()) != m.dim() || static_cast<int>(pt0.p.size()) != m.dim()) {
    throw PreconditionError("initial data dimension does not match metric");
  }
  if (!pt0.finite()) throw PreconditionError("initial data must be finite");
  if (cfg.null_projection && (cfg.projection_index < 0 || cfg.projection_index >= m.dim())) {
    throw PreconditionError("null projection needs a valid designated momentum index");
  }

  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                          a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

  Trajectory traj;
  detail::GeodesicRhs rhs{m, &traj.diagnostics.rhs_evaluations};
  const std::size_t dim = 2 * static_cast<std::size_t>(m.dim());
  const double dir = cfg.lambda_end >= 0.0 ? 1.0 : -1.0;
  const double lam_end = cfg.lambda_end;

  std::vector<double> z = detail::pack(pt0);
  std::vector<std::vector<double>> fixed0;
  const auto record = [&](double lam, const std::vector<double>& state) {
    PhasePoint pt = detail::unpack(state);
    const double H = hamiltonian_value(m, pt);
    traj.lambda.push_back(lam);
    traj.h_values.push_back(H);
    traj.diagnostics.max_abs_h = std::max(traj.diagnostics.max_abs_h, std::abs(H));
    if (std::abs(H) > cfg.null_tol) traj.diagnostics.null_violation = true;
    for (int k : cfg.monitored_momenta) {
      const double drift = std::abs(pt.p[static_cast<std::size_t>(k)] - pt0.p[static_cast<std::size_t>(k)]);
      traj.diagnostics.max_constraint_drift = std::max(traj.diagnostics.max_constraint_drift, drift);
    }
    traj.points.push_back(std::move(pt));
  };

  const auto project = [&](std::vector<double>& state) {
    PhasePoint pt = detail::unpack(state);
    const double H = hamiltonian_value(m, pt);
    if (std::abs(H) <= cfg.null_tol) return false;
    const int k = cfg.projection_index;
    const double guess = pt.p[static_cast<std::size_t>(k)];
    pt.p = null_initial_momentum(m, pt.y, pt.p, k, guess);
    for (std::size_t i = 0; i < pt.p.size(); ++i) state[pt.y.size() + i] = pt.p[i];
    ++traj.diagnostics.projections;
    return true;
  };

  record(0.0, z);
  if (lam_end == 0.0) return traj;

  const auto err_norm = [&](const std::vector<double>& y0, const std::vector<double>& y1, const std::vector<double>& err) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
      const double r = err[i] / sc;
      s += r * r;
    }
    return std::sqrt(s / static_cast<double>(dim));
  };

  std::vector<double> k1 = rhs(z);
  double h = cfg.initial_step;
  if (h <= 0.0) {
    double ny = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(z[i]);
      ny += (z[i] / sc) * (z[i] / sc);
      nf += (k1[i] / sc) * (k1[i] / sc);
    }
    ny = std::sqrt(ny / static_cast<double>(dim));
    nf = std::sqrt(nf / static_cast<double>(dim));
    h = (ny < 1e-5 || nf < 1e-5) ? 1e-6 : 0.01 * ny / nf;
    h = std::min(h, 1e-2 * std::abs(lam_end));
  }
  h = std::min({h, cfg.max_step, std::abs(lam_end)});

  double lam = 0.0;
  std::vector<double> k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), tmp(dim), z1(dim), err(dim);
  const double hmin_rel = 1e-14;
  long steps = 0;
  bool last_failed_stage = false;
  while (dir * (lam_end - lam) > 0.0) {
    if (++steps > cfg.max_steps) throw IntegrationError("step budget exhausted at lambda = " + std::to_string(lam));
    bool final_step = false;
    if (h >= std::abs(lam_end - lam)) {
      h = std::abs(lam_end - lam);
      final_step = true;
    }
    if (h <= hmin_rel * std::max(1.0, std::abs(lam))) {
      throw IntegrationError("step size underflow at lambda = " + std::to_string(lam));
    }
    const double hs = dir * h;
    try {
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = z[i] + hs * a21 * k1[i];
      k2 = rhs(tmp);
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = z[i] + hs * (a31 * k1[i] + a32 * k2[i]);
      k3 = rhs(tmp);
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = z[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      k4 = rhs(tmp);
      for (std::size_t i = 0; i < dim; ++i) tmp[i] = z[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      k5 = rhs(tmp);
      for (std::size_t i = 0; i < dim; ++i)
        tmp[i] = z[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      k6 = rhs(tmp);
      for (std::size_t i = 0; i < dim; ++i)
        z1[i] = z[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      k7 = rhs(z1);
    } catch (const Error&) {
      // A trial stage left the domain; retry with a smaller step. A genuine
      // singularity on the path ends in step underflow.
      ++traj.diagnostics.rejected_steps;
      if (last_failed_stage && h <= 1e-10 * std::max(1.0, std::abs(lam))) throw;
      last_failed_stage = true;
      h *= 0.25;
      continue;
    }
    last_failed_stage = false;
    for (std::size_t i = 0; i < dim; ++i)
      err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double en = err_norm(z, z1, err);
    if (!std::isfinite(en)) {
      ++traj.diagnostics.rejected_steps;
      h *= 0.25;
      continue;
    }
    if (en <= 1.0) {
      Trajectory::DenseSegment seg;
      seg.lambda0 = lam;
      seg.h = hs;
      seg.r1 = z;
      seg.r2.resize(dim);
      seg.r3.resize(dim);
      seg.r4.resize(dim);
      seg.r5.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) {
        const double ydiff = z1[i] - z[i];
        const double bspl = hs * k1[i] - ydiff;
        seg.r2[i] = ydiff;
        seg.r3[i] = bspl;
        seg.r4[i] = ydiff - hs * k7[i] - bspl;
        seg.r5[i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      traj.dense().push_back(std::move(seg));
      lam = final_step ? lam_end : lam + hs;
      z = z1;
      k1 = k7;
      if (cfg.null_projection && project(z)) k1 = rhs(z);
      record(lam, z);
      ++traj.diagnostics.accepted_steps;
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      h = std::min(h * fac, cfg.max_step);
    } else {
      ++traj.diagnostics.rejected_steps;
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
    }
  }
  return traj;
}

/// Null-geodesic integration: pt0 must satisfy |𝓗| ≤ null_tol.
inline Trajectory integrate_null_geodesic(const Metric& m, const PhasePoint& pt0, const IntegratorConfig& cfg) {
  const double H0 = hamiltonian_value(m, pt0);
  if (!(std::abs(H0) <= cfg.null_tol)) {
    throw PreconditionError("initial data is not null: |H| = " + std::to_string(std::abs(H0)));
  }
  return integrate_geodesic(m, pt0, cfg);
}

}  // namespace nullift

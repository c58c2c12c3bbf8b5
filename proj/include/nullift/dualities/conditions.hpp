#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "nullift/dualities/map.hpp"
#include "nullift/dynamics/curves.hpp"
#include "nullift/dynamics/integrator.hpp"
#include "nullift/errors.hpp"
#include "nullift/lifts/natural_system.hpp"

namespace nullift {

/// Worst residual of each temporal condition over a sample.
struct TemporalResidual {
  double omega = 0.0;             // Ω² − J^u_u/ν
  double metric = 0.0;            // Ω²h_ij − ρ²h̄_ij
  double potential = 0.0;         // −2Ω²V against the target data
  double vector_potential = 0.0;  // Ω²A_i against the target data

  double max() const { return std::max({omega, metric, potential, vector_potential}); }
};

/// Temporal conditions for a map with ū = φ(u), q̄ = ρ(u) q, v̄ = ν v + J(q, u):
///   Ω² = φ′/ν,  Ω²h = ρ²h̄,
///   −2Ω²V = ρ′²h̄qq + 2νΩ²ρ′Ā·q − 2ν²Ω⁴V̄ + 2νΩ²J^v_u,
///   Ω²A_i = ρρ′h̄_il q^l + νΩ²ρĀ_i + νΩ²J^v_i.
/// `source` holds (Ω², h, V, A) on the chart (q, u, v); `target` is the
/// system over (q̄, ū) whose lift the map pulls back.
inline TemporalResidual temporal_conditions_residual(const DualityMap& f, const EDExtraction& source, const NaturalSystem& target,
                                                     const PointSet& sample) {
  const int N = f.dim(), n = N - 2;
  if (n != target.n) throw PreconditionError("map and target dimensions differ");
  const int u = n, v = n + 1;
  const double nu = f.nu();
  const ScalarField drho = f.jacobian_field(0, 0).partial(u);
  const double e2 = target.e * target.e;
  TemporalResidual r;
  for (const auto& y : sample) {
    const Mat J = f.jacobian(y);
    const double rho = J(0, 0);
    for (int i = 0; i < n; ++i) {
      if (std::abs(J(u, i)) > 1e-12 || std::abs(J(i, v)) > 1e-12) throw PreconditionError("temporal map needs ū = φ(u) and q̄ independent of v");
    }
    if (std::abs(J(u, v)) > 1e-12) throw PreconditionError("temporal map needs ū = φ(u)");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double expect = i == j ? rho : 0.0;
        if (std::abs(J(i, j) - expect) > 1e-12 * (1.0 + std::abs(rho))) throw PreconditionError("temporal map needs q̄ = ρ(u) q");
      }
    if (std::abs(J(v, v) - nu) > 1e-12 * (1.0 + std::abs(nu))) throw PreconditionError("map does not scale v by ν");
    const double rp = drho(y);
    const auto ybar = f.apply(y);
    const std::vector<double> qu(ybar.begin(), ybar.begin() + n + 1);
    const Mat hb = target.h_matrix(qu);
    const double Vb = e2 * target.V(qu);
    Vec Ab = Vec::Zero(n);
    for (int i = 0; i < n; ++i) Ab(i) = target.e * target.A_component(i)(qu);
    const Vec q = Eigen::Map<const Vec>(y.data(), n);
    const double W = source.Omega2(y);
    const double V = source.V(y);

    r.omega = std::max(r.omega, std::abs(W - J(u, u) / nu));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r.metric = std::max(r.metric, std::abs(W * source.h(i, j)(y) - rho * rho * hb(i, j)));
    const double rhs_V = rp * rp * q.dot(hb * q) + 2.0 * nu * W * rp * Ab.dot(q) - 2.0 * nu * nu * W * W * Vb + 2.0 * nu * W * J(v, u);
    r.potential = std::max(r.potential, std::abs(-2.0 * W * V - rhs_V));
    const Vec hq = hb * q;
    for (int i = 0; i < n; ++i) {
      const double Ai = source.A.empty() ? 0.0 : source.A[static_cast<std::size_t>(i)](y);
      const double rhs_A = rho * rp * hq(i) + nu * W * rho * Ab(i) + nu * W * J(v, i);
      r.vector_potential = std::max(r.vector_potential, std::abs(W * Ai - rhs_A));
    }
  }
  return r;
}

/// Residual of the mixed equations along a ḡ-geodesic pulled back by f⁻¹:
/// with dλ = Ω⁻² dλ̄ (Ω a function of u) the pulled-back curve obeys
///   q̈ = 0,  ü = 0,  v̈ = (∂_uΩ/Ω)(|q̇|² + 2u̇v̇).
/// `omega2` is Ω² on the source chart; `target` is ḡ. Derivatives are taken
/// from the dense output by fourth-order differences.
inline double mixed_equations_residual(const DualityMap& f, const ScalarField& omega2, const Metric& target,
                                       const Trajectory& geodesic, std::size_t samples = 40) {
  const int N = f.dim(), n = N - 2, u = n, v = n + 1;
  if (!geodesic.has_dense()) throw PreconditionError("mixed_equations_residual needs dense output");
  for (int k = 0; k < N; ++k)
    if (k != u && omega2.dependencies().count(k)) throw PreconditionError("Ω must depend on u only");
  const ScalarField dW = omega2.partial(u);
  const double l0 = std::min(geodesic.lambda.front(), geodesic.lambda.back());
  const double l1 = std::max(geodesic.lambda.front(), geodesic.lambda.back());
  const double delta = 1e-3 * (l1 - l0);
  std::optional<std::vector<double>> guess;
  // dy/dλ = Ω² J⁻¹ dȳ/dλ̄
  const auto velocity = [&](double lb, std::vector<double>& y_out) {
    const PhasePoint pb = geodesic.state_at(lb);
    const Vec ybar_dot = target.inverse(pb.y) * as_vec(pb.p);
    const auto y = f.invert(pb.y, guess);
    y_out = y;
    const Mat J = f.jacobian(y);
    return Vec(omega2(y) * J.fullPivLu().solve(ybar_dot));
  };
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const double lb = l0 + 3.0 * delta + (l1 - l0 - 6.0 * delta) * (static_cast<double>(s) + 0.5) / static_cast<double>(samples);
    std::vector<double> y;
    const Vec w0 = velocity(lb, y);
    guess = y;
    std::vector<double> tmp;
    const Vec wp1 = velocity(lb + delta, tmp), wm1 = velocity(lb - delta, tmp);
    const Vec wp2 = velocity(lb + 2 * delta, tmp), wm2 = velocity(lb - 2 * delta, tmp);
    const Vec acc = omega2(y) * (-wp2 + 8.0 * wp1 - 8.0 * wm1 + wm2) / (12.0 * delta);
    for (int i = 0; i <= n; ++i) worst = std::max(worst, std::abs(acc(i)));
    const double ratio = 0.5 * dW(y) / omega2(y);  // ∂_uΩ/Ω
    const double qq = w0.head(n).squaredNorm();
    worst = std::max(worst, std::abs(acc(v) - ratio * (qq + 2.0 * w0(u) * w0(v))));
  }
  return worst;
}

struct TransportCheck {
  double hausdorff = 0.0;   // image of the source orbit vs target orbit, in (q̄, ū)
  double max_abs_h = 0.0;   // 𝓗_ḡ along the pointwise image
  double lambda_bar_end = 0.0;
};

/// Integrate the source lift from `start`, push the orbit forward, and
/// integrate ḡ from the image of `start` over the same ū range. ū must be
/// affine along ḡ-geodesics (true for Eisenhart-Duval targets, where
/// dū/dλ̄ = p̄_v), which fixes λ̄_end.
inline TransportCheck transport_check(const DualityMap& f, const Metric& source, const Metric& target, const PhasePoint& start,
                                      const IntegratorConfig& cfg, std::size_t count = 2000) {
  const int N = f.dim(), n = N - 2, u = n;
  const Trajectory src = integrate_null_geodesic(source, start, cfg);
  const PhasePoint img = map_phase_point(f, start, MapDirection::kForward);
  const double rate = (target.inverse(img.y) * as_vec(img.p))(u);
  if (std::abs(rate) < 1e-14) throw PreconditionError("ū does not advance along the image geodesic");
  const double u0 = img.y[static_cast<std::size_t>(u)];
  const double u1 = f.apply(src.points.back().y)[static_cast<std::size_t>(u)];
  IntegratorConfig tcfg = cfg;
  tcfg.lambda_end = (u1 - u0) / rate;
  const Trajectory tgt = integrate_null_geodesic(target, img, tcfg);

  std::vector<int> comps;
  for (int k = 0; k <= n; ++k) comps.push_back(k);
  Polyline image;
  const double l0 = src.lambda.front(), l1 = src.lambda.back();
  TransportCheck out;
  out.lambda_bar_end = tcfg.lambda_end;
  for (std::size_t k = 0; k < count; ++k) {
    const double s = l0 + (l1 - l0) * static_cast<double>(k) / static_cast<double>(count - 1);
    const PhasePoint m = map_phase_point(f, src.state_at(s), MapDirection::kForward);
    out.max_abs_h = std::max(out.max_abs_h, std::abs(hamiltonian_value(target, m)));
    image.emplace_back(m.y.begin(), m.y.begin() + n + 1);
  }
  out.hausdorff = hausdorff_distance(image, dense_curve_of(tgt, comps, count));
  return out;
}

}  // namespace nullift

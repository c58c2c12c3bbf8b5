#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/fields/scalar_field.hpp"
#include "nullift/geometry/connection.hpp"
#include "nullift/geometry/curvature.hpp"
#include "nullift/geometry/metric.hpp"
#include "nullift/geometry/schwarzian.hpp"

namespace nullift {

/// Conformal Laplacian Δ_Y = ∇_A g^{AB} ∇_B − ((N−2)/(4(N−1))) R on an
/// N ≥ 3 dimensional metric. `left_weight` is the exponent w_L in
/// Δ̄_Y = Ω^{−w_L} Δ_Y ∘ Ω^{(N−2)/2}; 0 selects (N+2)/2.
struct YamabeContext {
  Metric metric;
  double hbar = 1.0;
  double mass = 1.0;
  double left_weight = 0.0;

  YamabeContext() = default;
  explicit YamabeContext(Metric m, double hbar_ = 1.0, double mass_ = 1.0, double w_L = 0.0)
      : metric(std::move(m)), hbar(hbar_), mass(mass_), left_weight(w_L) {
    validate();
  }

  void validate() const {
    if (metric.dim() < 3) throw PreconditionError("Yamabe operator needs N >= 3 (the curvature coefficient degenerates)");
    if (!(hbar > 0.0) || !(mass > 0.0)) throw PreconditionError("hbar and mass must be positive");
  }

  int dim() const { return metric.dim(); }
  double coupling() const { return (dim() - 2.0) / (4.0 * (dim() - 1.0)); }
  double weight() const { return left_weight > 0.0 ? left_weight : (dim() + 2.0) / 2.0; }
  double field_weight() const { return (dim() - 2.0) / 2.0; }

  YamabeContext rescaled(const ScalarField& omega) const {
    return YamabeContext(metric.scaled(omega * omega), hbar, mass, left_weight);
  }
};

/// g^{AB}(∂_A∂_BΨ − Γ^C_{AB}∂_CΨ) − ((N−2)/(4(N−1))) R Ψ at y.
inline double yamabe_apply(const YamabeContext& ctx, const ScalarField& psi, std::span<const double> y) {
  const int n = ctx.dim();
  if (psi.arity() != n) throw PreconditionError("Psi must be a field of the chart");
  const MetricJet j = ctx.metric.jet(y, 2);
  const DenseTensor G = christoffel_from_jet(j);
  const CurvaturePack cp = curvature_from_jet(j);
  const auto J = psi.jet<2>(y);
  double lap = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (j.ginv(a, b) == 0.0) continue;
      double h = J.derivative({a, b});
      for (int c = 0; c < n; ++c) h -= G(c, a, b) * J.d(c);
      lap += j.ginv(a, b) * h;
    }
  return lap - ctx.coupling() * cp.scalar * J.value();
}

/// max over the sample of |Δ̄_Y Ψ − Ω^{−w_L} Δ_Y(Ω^{(N−2)/2} Ψ)|, Δ̄_Y built on Ω²g.
inline double yamabe_covariance_residual(const YamabeContext& ctx, const ScalarField& omega, const ScalarField& psi, const PointSet& sample) {
  const YamabeContext bar = ctx.rescaled(omega);
  const ScalarField lifted = pow(omega, ctx.field_weight()) * psi;
  double worst = 0.0;
  for (const auto& y : sample) {
    const double w = omega(y);
    if (!(w > 0.0)) throw DomainError("Omega must be positive on the sample");
    const double lhs = yamabe_apply(bar, psi, y);
    const double rhs = std::pow(w, -ctx.weight()) * yamabe_apply(ctx, lifted, y);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

/// U′ = U + (ħ²/m)((N−2)/(8(N−1))) R.
inline double corrected_potential(const YamabeContext& ctx, const ScalarField& U, std::span<const double> y) {
  const double R = curvature(ctx.metric, y).scalar;
  return U(y) + (ctx.hbar * ctx.hbar / ctx.mass) * (ctx.dim() - 2.0) / (8.0 * (ctx.dim() - 1.0)) * R;
}

struct KernelTransport {
  double epsilon = 0.0;     // max |Δ_Y Ψ| on the sample
  double residual = 0.0;    // max |Δ̄_Y Ψ̄|, Ψ̄ = Ω^{−(N−2)/2} Ψ
  double bound_ratio = 0.0; // max |Δ̄_Y Ψ̄| / (Ω^{−w_L} ε), 0 when ε = 0
  bool within_bound = true;
};

/// Transport of an (approximate) kernel element Ψ of Δ_Y to Ψ̄ on Ω²g.
inline KernelTransport kernel_transport_check(const YamabeContext& ctx, const ScalarField& omega, const ScalarField& psi, const PointSet& sample,
                                              double slack = 10.0) {
  const YamabeContext bar = ctx.rescaled(omega);
  const ScalarField psibar = pow(omega, -ctx.field_weight()) * psi;
  KernelTransport out;
  std::vector<double> bar_values, w_values;
  for (const auto& y : sample) {
    out.epsilon = std::max(out.epsilon, std::abs(yamabe_apply(ctx, psi, y)));
    bar_values.push_back(std::abs(yamabe_apply(bar, psibar, y)));
    w_values.push_back(omega(y));
  }
  for (std::size_t k = 0; k < bar_values.size(); ++k) {
    out.residual = std::max(out.residual, bar_values[k]);
    const double bound = std::pow(w_values[k], -ctx.weight()) * out.epsilon;
    if (bound > 0.0) out.bound_ratio = std::max(out.bound_ratio, bar_values[k] / bound);
    if (bar_values[k] > slack * bound + 1e-9) out.within_bound = false;
  }
  return out;
}

}  // namespace nullift

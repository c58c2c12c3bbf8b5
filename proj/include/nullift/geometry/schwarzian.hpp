#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/fields/scalar_field.hpp"
#include "nullift/geometry/connection.hpp"
#include "nullift/geometry/curvature.hpp"
#include "nullift/geometry/metric.hpp"

namespace nullift {

using PointSet = std::vector<std::vector<double>>;

/// B_MN(φ) = ∇_M∇_N φ − ∂_Mφ ∂_Nφ − (1/N)(∇²φ − |dφ|²) g_MN.
inline Mat schwarzian_tensor(const Metric& m, const ScalarField& varphi, std::span<const double> y) {
  const int n = m.dim();
  if (varphi.arity() != n) throw PreconditionError("schwarzian_tensor: field arity does not match metric dimension");
  const MetricJet j = m.jet(y, 1);
  const DenseTensor G = christoffel_from_jet(j);
  Vec d = Vec::Zero(n);
  Mat hess = Mat::Zero(n, n);
  if (!varphi.is_constant()) {
    const auto f = varphi.jet<2>(y);
    for (int a = 0; a < n; ++a) {
      d(a) = f.d(a);
      for (int b = a; b < n; ++b) hess(a, b) = hess(b, a) = f.derivative({a, b});
    }
  }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += G(k, a, b) * d(k);
      hess(a, b) -= s;
    }
  const double lap = j.ginv.cwiseProduct(hess).sum();
  const double grad2 = d.dot(j.ginv * d);
  return hess - d * d.transpose() - ((lap - grad2) / n) * j.g;
}

/// S(φ)(u) = φ‴/φ′ − (3/2)(φ″/φ′)². φ must be a field of one variable.
inline double schwarzian_derivative(const ScalarField& varphi, double u) {
  if (varphi.arity() != 1) throw PreconditionError("schwarzian_derivative needs a field of one variable");
  if (varphi.is_constant()) throw DomainError("schwarzian_derivative: phi' = 0 (constant map)");
  const std::vector<double> y{u};
  const auto j = varphi.jet<3>(y);
  const double d1 = j.derivative({0});
  const double d2 = j.derivative({0, 0});
  const double d3 = j.derivative({0, 0, 0});
  if (d1 == 0.0) throw DomainError("schwarzian_derivative: phi'(" + std::to_string(u) + ") = 0");
  const double r = d2 / d1;
  return d3 / d1 - 1.5 * r * r;
}

struct MobiusCheck {
  bool mobius = false;
  double residual = 0.0;
};

/// Whether the conformal exponent ψ (ḡ = e^{2ψ}g) has vanishing Schwarzian
/// tensor on the sample.
inline MobiusCheck is_mobius(const Metric& m, const ScalarField& psi, const PointSet& sample, double tol) {
  if (sample.empty()) throw PreconditionError("is_mobius: empty sample");
  MobiusCheck out;
  for (const auto& y : sample) out.residual = std::max(out.residual, schwarzian_tensor(m, psi, y).cwiseAbs().maxCoeff());
  out.mobius = out.residual <= tol;
  return out;
}

/// Conformal exponent ψ = ½ ln|φ′(u)| of a time reparameterization u ↦ φ(u),
/// as a field on the chart of dimension `dim` with u at `u_index`.
inline ScalarField time_map_exponent(const ScalarField& time_map, int dim, int u_index) {
  if (time_map.arity() != 1) throw PreconditionError("time map must be a field of one variable");
  const std::vector<int> index_map{u_index};
  return (0.5 * log(abs(time_map.partial(0)))).remap(dim, index_map);
}

/// Möbius test for a time map φ(u): the Schwarzian tensor of ½ ln|φ′|.
/// A constant map (φ′ ≡ 0) is treated as the trivial case with ψ = 0.
inline MobiusCheck is_mobius_time_map(const Metric& m, const ScalarField& time_map, int u_index, const PointSet& sample,
                                      double tol) {
  if (time_map.is_constant()) return is_mobius(m, ScalarField::constant(m.dim(), 0.0), sample, tol);
  return is_mobius(m, time_map_exponent(time_map, m.dim(), u_index), sample, tol);
}

/// Max over the sample of |R⁰(g) − R⁰(e^{2φ}g) − (N−2) B_g(φ)|.
inline double trace_free_ricci_change(const Metric& m, const ScalarField& varphi, const PointSet& sample) {
  const Metric rescaled = m.scaled(exp(2.0 * varphi));
  const int n = m.dim();
  double worst = 0.0;
  for (const auto& y : sample) {
    const Mat r0 = curvature(m, y).trace_free;
    const Mat r0bar = curvature(rescaled, y).trace_free;
    const Mat b = schwarzian_tensor(m, varphi, y);
    worst = std::max(worst, (r0 - r0bar - (n - 2.0) * b).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace nullift

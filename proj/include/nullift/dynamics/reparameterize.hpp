#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nullift/dynamics/integrator.hpp"
#include "nullift/fields/scalar_field.hpp"

namespace nullift {

struct Reparameterization {
  Trajectory trajectory;
  double error_estimate = 0.0;  // accumulated quadrature error bound
};

/// dλ̄ = Ω²(y(λ)) dλ along the samples. Each step is integrated with
/// Simpson's rule on the step and on its two halves (dense output supplies
/// the interior points); the Richardson-corrected value is kept and the
/// correction magnitude is accumulated as the error estimate. Without dense
/// output the trapezoid rule is used.
inline Reparameterization reparameterize(const Trajectory& traj, const ScalarField& omega) {
  if (traj.size() == 0) throw PreconditionError("reparameterize: empty trajectory");
  if (traj.is_reparameterized()) throw PreconditionError("reparameterize: trajectory is already reparameterized");
  const auto omega2 = [&](const std::vector<double>& y) {
    const double o = omega(y);
    const double o2 = o * o;
    if (!(o2 > 0.0) || !std::isfinite(o2)) throw DomainError("reparameterize: Omega vanishes on the curve");
    return o2;
  };
  const std::vector<double>& lam = traj.lambda;
  std::vector<double> out(traj.size());
  std::vector<double> slope(traj.size());
  out[0] = lam[0];
  slope[0] = omega2(traj.points[0].y);
  double err = 0.0;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double a = lam[k], h = lam[k + 1] - lam[k];
    const double f0 = slope[k];
    const double f4 = omega2(traj.points[k + 1].y);
    slope[k + 1] = f4;
    double inc;
    if (traj.has_dense()) {
      const auto f = [&](double l) { return omega2(traj.state_at(l).y); };
      const double f1 = f(a + 0.25 * h), f2 = f(a + 0.5 * h), f3 = f(a + 0.75 * h);
      const double s1 = h / 6.0 * (f0 + 4.0 * f2 + f4);
      const double s2 = h / 12.0 * (f0 + 4.0 * f1 + 2.0 * f2 + 4.0 * f3 + f4);
      inc = s2 + (s2 - s1) / 15.0;
      err += std::abs(s2 - s1) / 15.0;
    } else {
      inc = 0.5 * h * (f0 + f4);
      err += std::abs(h * (f4 - f0)) / 2.0;
    }
    out[k + 1] = out[k] + inc;
  }
  return {traj.with_parameter(std::move(out), std::move(slope)), err};
}

}  // namespace nullift

#pragma once

#include <span>

#include "nullift/geometry/connection.hpp"
#include "nullift/geometry/metric.hpp"
#include "nullift/geometry/tensor.hpp"

namespace nullift {

// Convention: R^A_{BCD} = ∂_C Γ^A_{DB} − ∂_D Γ^A_{CB} + Γ^A_{CE}Γ^E_{DB} − Γ^A_{DE}Γ^E_{CB},
// R_{BD} = R^A_{BAD}. The unit 2-sphere has R = +2.
struct CurvaturePack {
  DenseTensor riemann;  // (A,B,C,D)
  Mat ricci;
  double scalar = 0.0;
  Mat trace_free;
};

inline CurvaturePack curvature_from_jet(const MetricJet& j) {
  const int n = static_cast<int>(j.g.rows());
  const DenseTensor G = christoffel_from_jet(j);
  const DenseTensor dG = christoffel_derivative_from_jet(j);
  CurvaturePack out;
  out.riemann = DenseTensor(n, 4);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          double s = dG(c, a, d, b) - dG(d, a, c, b);
          for (int e = 0; e < n; ++e) s += G(a, c, e) * G(e, d, b) - G(a, d, e) * G(e, c, b);
          out.riemann(a, b, c, d) = s;
          out.riemann(a, b, d, c) = -s;
        }
  out.ricci = Mat::Zero(n, n);
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double s = 0.0;
      for (int a = 0; a < n; ++a) s += out.riemann(a, b, a, d);
      out.ricci(b, d) = s;
    }
  out.scalar = (j.ginv.cwiseProduct(out.ricci)).sum();
  out.trace_free = out.ricci - (out.scalar / n) * j.g;
  return out;
}

inline CurvaturePack curvature(const Metric& m, std::span<const double> y) { return curvature_from_jet(m.jet(y, 2)); }

}  // namespace nullift

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/fields/parser.hpp"
#include "nullift/fields/scalar_field.hpp"
#include "nullift/geometry/tensor.hpp"

namespace nullift {

/// g_{AB} together with its first (and optionally second) coordinate
/// derivatives at one point. dg[C](A,B) = d_C g_AB, ddg[C*N+D](A,B) = d_C d_D g_AB.
struct MetricJet {
  Mat g;
  Mat ginv;
  std::vector<Mat> dg;
  std::vector<Mat> ddg;
};

/// Coordinate metric g_AB(y) on an N-dimensional chart.
class Metric {
 public:
  Metric() = default;
  explicit Metric(MatrixField g) : g_(std::move(g)) {
    if (g_.dim() != g_.arity()) throw PreconditionError("metric entries must be fields of the chart coordinates");
  }

  int dim() const { return g_.dim(); }
  const MatrixField& field() const { return g_; }
  const ScalarField& entry(int a, int b) const { return g_(a, b); }

  Mat matrix(std::span<const double> y) const {
    check_point(y);
    const int n = dim();
    Mat m(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) m(a, b) = m(b, a) = g_(a, b)(y);
    return m;
  }

  Mat inverse(std::span<const double> y) const { return checked_inverse(matrix(y), y); }

  /// Metric, inverse, and derivatives up to `order` (1 or 2) at y.
  MetricJet jet(std::span<const double> y, int order = 1) const {
    check_point(y);
    const int n = dim();
    MetricJet out;
    out.g = Mat::Zero(n, n);
    out.dg.assign(static_cast<std::size_t>(n), Mat::Zero(n, n));
    if (order >= 2) out.ddg.assign(static_cast<std::size_t>(n * n), Mat::Zero(n, n));
    for (int a = 0; a < n; ++a) {
      for (int b = a; b < n; ++b) {
        const ScalarField& f = g_(a, b);
        if (auto c = f.constant_value()) {
          out.g(a, b) = out.g(b, a) = *c;
          continue;
        }
        if (order >= 2) {
          const auto j = f.jet<2>(y);
          out.g(a, b) = out.g(b, a) = j.value();
          for (int c = 0; c < n; ++c) {
            out.dg[static_cast<std::size_t>(c)](a, b) = out.dg[static_cast<std::size_t>(c)](b, a) = j.d(c);
            for (int d = c; d < n; ++d) {
              const double v = j.derivative({c, d});
              out.ddg[static_cast<std::size_t>(c * n + d)](a, b) = out.ddg[static_cast<std::size_t>(c * n + d)](b, a) = v;
              out.ddg[static_cast<std::size_t>(d * n + c)](a, b) = out.ddg[static_cast<std::size_t>(d * n + c)](b, a) = v;
            }
          }
        } else {
          const auto j = f.jet<1>(y);
          out.g(a, b) = out.g(b, a) = j.value();
          for (int c = 0; c < n; ++c) out.dg[static_cast<std::size_t>(c)](a, b) = out.dg[static_cast<std::size_t>(c)](b, a) = j.d(c);
        }
      }
    }
    out.ginv = checked_inverse(out.g, y);
    return out;
  }

  /// Entry-wise product with a scalar field: (s g)_AB.
  Metric scaled(const ScalarField& s) const {
    MatrixField m(dim(), dim());
    for (int a = 0; a < dim(); ++a)
      for (int b = a; b < dim(); ++b) {
        if (g_(a, b).is_zero()) continue;
        m.set(a, b, s * g_(a, b));
      }
    return Metric(std::move(m));
  }

 private:
  void check_point(std::span<const double> y) const {
    if (static_cast<int>(y.size()) != dim()) throw PreconditionError("point dimension does not match metric dimension");
  }

  static std::string describe(std::span<const double> y) {
    std::string s = "(";
    for (std::size_t i = 0; i < y.size(); ++i) s += (i ? ", " : "") + std::to_string(y[i]);
    return s + ")";
  }

  static Mat checked_inverse(const Mat& g, std::span<const double> y) {
    if (!g.allFinite()) throw SingularMetricError("metric not finite at " + describe(y));
    Eigen::FullPivLU<Mat> lu(g);
    const double scale = g.cwiseAbs().maxCoeff();
    if (scale == 0.0 || !lu.isInvertible() || lu.rcond() < 1e-14) {
      throw SingularMetricError("metric is singular at " + describe(y));
    }
    Mat inv = lu.inverse();
    const double err = (g * inv - Mat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
    if (!(err <= 1e-9)) throw SingularMetricError("metric is numerically singular at " + describe(y));
    return inv;
  }

  MatrixField g_;
};

/// Metric from a square table of expression strings over `vars` (upper
/// triangle is read).
inline Metric metric_from_strings(const std::vector<std::vector<std::string>>& rows, std::span<const std::string> vars) {
  const int n = static_cast<int>(rows.size());
  MatrixField m(n, static_cast<int>(vars.size()));
  for (int a = 0; a < n; ++a) {
    if (static_cast<int>(rows[static_cast<std::size_t>(a)].size()) != n) throw PreconditionError("metric rows must be square");
    for (int b = a; b < n; ++b) m.set(a, b, parse_scalar_field(rows[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)], vars));
  }
  return Metric(std::move(m));
}

}  // namespace nullift

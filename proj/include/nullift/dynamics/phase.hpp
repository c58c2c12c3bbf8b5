#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/geometry/metric.hpp"

namespace nullift {

/// (y^A, p_A) on the lift cotangent bundle.
struct PhasePoint {
  std::vector<double> y;
  std::vector<double> p;

  bool finite() const {
    for (double x : y)
      if (!std::isfinite(x)) return false;
    for (double x : p)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

inline Eigen::Map<const Vec> as_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

/// 𝓗 = ½ g^{AB} p_A p_B.
inline double hamiltonian_value(const Metric& m, const PhasePoint& pt) {
  if (static_cast<int>(pt.p.size()) != m.dim()) throw PreconditionError("momentum dimension does not match metric");
  const auto p = as_vec(pt.p);
  return 0.5 * p.dot(m.inverse(pt.y) * p);
}

/// Solve 𝓗(y, p) = 0 for p_k with the other components of `p_partial` held
/// fixed. 𝓗 is a x² + b x + c in x = p_k. With a = 0 the solve is linear;
/// otherwise the root closest to `guess` is taken, and a guess is required
/// when the roots differ.
inline std::vector<double> null_initial_momentum(const Metric& m, std::span<const double> y,
                                                 std::vector<double> p_partial, int k,
                                                 std::optional<double> guess = std::nullopt) {
  const int n = m.dim();
  if (static_cast<int>(p_partial.size()) != n) throw PreconditionError("momentum dimension does not match metric");
  if (k < 0 || k >= n) throw PreconditionError("designated momentum index out of range");
  const Mat ginv = m.inverse(y);
  const auto P = [&](int i) { return i == k ? 0.0 : p_partial[static_cast<std::size_t>(i)]; };
  const double a = 0.5 * ginv(k, k);
  double b = 0.0, c = 0.0;
  double scale = std::abs(a);
  for (int i = 0; i < n; ++i) {
    if (i == k) continue;
    b += ginv(k, i) * P(i);
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      c += 0.5 * ginv(i, j) * P(i) * P(j);
    }
    scale = std::max(scale, std::abs(ginv(k, i)));
  }
  double x = 0.0;
  if (std::abs(a) <= 1e-14 * std::max(1.0, scale)) {
    if (std::abs(b) <= 1e-300) throw PreconditionError("null condition does not involve the designated momentum");
    x = -c / b;
  } else {
    double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
      if (disc > -1e-14 * (b * b + std::abs(4.0 * a * c))) {
        disc = 0.0;
      } else {
        throw NoRealSolutionError("null condition has no real solution for the designated momentum");
      }
    }
    const double sq = std::sqrt(disc);
    const double qv = -0.5 * (b + std::copysign(sq, b == 0.0 ? 1.0 : b));
    double r1 = qv / a;
    double r2 = qv != 0.0 ? c / qv : -r1;
    if (sq == 0.0) r2 = r1 = -b / (2.0 * a);
    if (r1 == r2) {
      x = r1;
    } else if (!guess) {
      throw PreconditionError("two null roots for the designated momentum; a guess is required");
    } else {
      x = std::abs(r1 - *guess) <= std::abs(r2 - *guess) ? r1 : r2;
    }
    // one Newton polish
    const double f = (a * x + b) * x + c;
    const double df = 2.0 * a * x + b;
    if (df != 0.0) x -= f / df;
  }
  p_partial[static_cast<std::size_t>(k)] = x;
  return p_partial;
}

}  // namespace nullift

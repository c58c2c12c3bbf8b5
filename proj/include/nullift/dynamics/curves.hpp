#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>
#include <vector>

#include "nullift/dynamics/integrator.hpp"

namespace nullift {

using Polyline = std::vector<std::vector<double>>;

/// Selected components of the samples: indices < N pick y, indices >= N
/// pick p (index − N).
inline Polyline curve_of(const Trajectory& traj, const std::vector<int>& components) {
  Polyline out;
  out.reserve(traj.size());
  const int n = traj.dim();
  for (const auto& pt : traj.points) {
    std::vector<double> v;
    v.reserve(components.size());
    for (int c : components) v.push_back(c < n ? pt.y[static_cast<std::size_t>(c)] : pt.p[static_cast<std::size_t>(c - n)]);
    out.push_back(std::move(v));
  }
  return out;
}

/// Curve sampled from dense output at `count` equally spaced parameter
/// values (falls back to the stored samples without dense output).
inline Polyline dense_curve_of(const Trajectory& traj, const std::vector<int>& components, std::size_t count = 2000) {
  if (!traj.has_dense() || count < 2) return curve_of(traj, components);
  const int n = traj.dim();
  const double a = traj.lambda.front(), b = traj.lambda.back();
  Polyline out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double s = i + 1 == count ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
    const PhasePoint pt = traj.state_at(s);
    std::vector<double> v;
    v.reserve(components.size());
    for (int c : components) v.push_back(c < n ? pt.y[static_cast<std::size_t>(c)] : pt.p[static_cast<std::size_t>(c - n)]);
    out.push_back(std::move(v));
  }
  return out;
}

inline double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// `count` points equally spaced in Euclidean arc length along the polyline.
inline Polyline resample_arc_length(const Polyline& poly, std::size_t count) {
  if (poly.empty() || count < 2) throw PreconditionError("resample_arc_length: need a nonempty curve and count >= 2");
  std::vector<double> s(poly.size(), 0.0);
  for (std::size_t k = 1; k < poly.size(); ++k) s[k] = s[k - 1] + distance(poly[k - 1], poly[k]);
  const double total = s.back();
  Polyline out;
  out.reserve(count);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const double target = total * static_cast<double>(i) / static_cast<double>(count - 1);
    while (seg + 2 < poly.size() && s[seg + 1] < target) ++seg;
    if (poly.size() == 1 || s[seg + 1] == s[seg]) {
      out.push_back(poly[std::min(seg + 1, poly.size() - 1)]);
      continue;
    }
    const double w = std::clamp((target - s[seg]) / (s[seg + 1] - s[seg]), 0.0, 1.0);
    std::vector<double> v(poly[seg].size());
    for (std::size_t d = 0; d < v.size(); ++d) v[d] = (1.0 - w) * poly[seg][d] + w * poly[seg + 1][d];
    out.push_back(std::move(v));
  }
  return out;
}

inline double point_segment_distance(const std::vector<double>& x, const std::vector<double>& a, const std::vector<double>& b) {
  double ab2 = 0.0, t = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    ab2 += (b[d] - a[d]) * (b[d] - a[d]);
    t += (x[d] - a[d]) * (b[d] - a[d]);
  }
  t = ab2 > 0.0 ? std::clamp(t / ab2, 0.0, 1.0) : 0.0;
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double c = a[d] + t * (b[d] - a[d]) - x[d];
    s += c * c;
  }
  return std::sqrt(s);
}

/// Symmetric Hausdorff distance between two polylines (vertex to segment).
inline double hausdorff_distance(const Polyline& A, const Polyline& B) {
  if (A.empty() || B.empty()) throw PreconditionError("hausdorff_distance: empty curve");
  const auto one_sided = [](const Polyline& P, const Polyline& Q) {
    double worst = 0.0;
    for (const auto& x : P) {
      double best = std::numeric_limits<double>::infinity();
      if (Q.size() == 1) best = distance(x, Q[0]);
      for (std::size_t k = 0; k + 1 < Q.size(); ++k) best = std::min(best, point_segment_distance(x, Q[k], Q[k + 1]));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_sided(A, B), one_sided(B, A));
}

/// Hausdorff distance after resampling both curves to `count` points.
inline double curve_distance(const Polyline& A, const Polyline& B, std::size_t count = 2000) {
  return hausdorff_distance(resample_arc_length(A, count), resample_arc_length(B, count));
}

/// `lambda,y1..yN,p1..pN,H`, one row per sample, 17 significant digits.
inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  const int n = traj.dim();
  out << "lambda";
  for (int i = 1; i <= n; ++i) out << ",y" << i;
  for (int i = 1; i <= n; ++i) out << ",p" << i;
  out << ",H\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out << traj.lambda[k];
    for (double v : traj.points[k].y) out << ',' << v;
    for (double v : traj.points[k].p) out << ',' << v;
    out << ',' << traj.h_values[k] << '\n';
  }
  if (!out) throw Error("write failed for " + path);
}

}  // namespace nullift

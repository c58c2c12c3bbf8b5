#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "nullift/errors.hpp"
#include "nullift/fields/scalar_field.hpp"
#include "nullift/geometry/metric.hpp"
#include "nullift/geometry/tensor.hpp"

namespace nullift {

/// Gamma(A,B,C) = Γ^A_{BC} = ½ g^{AD}(∂_B g_DC + ∂_C g_DB − ∂_D g_BC).
inline DenseTensor christoffel_from_jet(const MetricJet& j) {
  const int n = static_cast<int>(j.g.rows());
  DenseTensor lower(n, 3);  // Γ_{D,BC}
  for (int d = 0; d < n; ++d)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        const double v = 0.5 * (j.dg[static_cast<std::size_t>(b)](d, c) + j.dg[static_cast<std::size_t>(c)](d, b) -
                                j.dg[static_cast<std::size_t>(d)](b, c));
        lower(d, b, c) = lower(d, c, b) = v;
      }
  DenseTensor gamma(n, 3);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = b; c < n; ++c) {
        double s = 0.0;
        for (int d = 0; d < n; ++d) s += j.ginv(a, d) * lower(d, b, c);
        gamma(a, b, c) = gamma(a, c, b) = s;
      }
  return gamma;
}

/// dGamma(E,A,B,C) = ∂_E Γ^A_{BC}; needs a jet of order 2.
inline DenseTensor christoffel_derivative_from_jet(const MetricJet& j) {
  const int n = static_cast<int>(j.g.rows());
  if (j.ddg.empty()) throw PreconditionError("christoffel derivative needs second metric derivatives");
  const auto dd = [&](int e, int c) -> const Mat& { return j.ddg[static_cast<std::size_t>(e * n + c)]; };
  DenseTensor lower(n, 3);
  DenseTensor dlower(n, 4);  // ∂_E Γ_{D,BC}
  for (int d = 0; d < n; ++d)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        lower(d, b, c) = 0.5 * (j.dg[static_cast<std::size_t>(b)](d, c) + j.dg[static_cast<std::size_t>(c)](d, b) -
                                j.dg[static_cast<std::size_t>(d)](b, c));
        for (int e = 0; e < n; ++e) dlower(e, d, b, c) = 0.5 * (dd(e, b)(d, c) + dd(e, c)(d, b) - dd(e, d)(b, c));
      }
  DenseTensor out(n, 4);
  for (int e = 0; e < n; ++e) {
    // ∂_E g^{AD} = −g^{AI} ∂_E g_IJ g^{JD}
    const Mat dginv = -j.ginv * j.dg[static_cast<std::size_t>(e)] * j.ginv;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          double s = 0.0;
          for (int d = 0; d < n; ++d) s += dginv(a, d) * lower(d, b, c) + j.ginv(a, d) * dlower(e, d, b, c);
          out(e, a, b, c) = s;
        }
  }
  return out;
}

/// Levi-Civita symbols Γ^A_{BC} at y, indexed (A,B,C).
inline DenseTensor christoffel_lc(const Metric& m, std::span<const double> y) {
  return christoffel_from_jet(m.jet(y, 1));
}

/// Exact Weyl structure {g, φ}. When the generating scalar σ is known,
/// φ = dσ.
struct WeylGauge {
  Metric metric;
  std::vector<ScalarField> phi;
  std::optional<ScalarField> generator;

  /// Fiducial gauge: φ = 0.
  static WeylGauge fiducial(const Metric& g) {
    WeylGauge w{g, {}, ScalarField::constant(g.dim(), 0.0)};
    w.phi.assign(static_cast<std::size_t>(g.dim()), ScalarField::constant(g.dim(), 0.0));
    return w;
  }

  /// φ = dσ.
  static WeylGauge exact(const Metric& g, const ScalarField& sigma) {
    WeylGauge w{g, {}, sigma};
    for (int a = 0; a < g.dim(); ++a) w.phi.push_back(sigma.partial(a));
    return w;
  }

  bool is_exact() const { return generator.has_value(); }

  Vec phi_at(std::span<const double> y) const {
    Vec v(static_cast<Eigen::Index>(phi.size()));
    for (std::size_t a = 0; a < phi.size(); ++a) v(static_cast<Eigen::Index>(a)) = phi[a](y);
    return v;
  }
};

/// (g, φ) → (Ω²g, φ + d ln Ω). Ω must stay positive; violations surface as
/// DomainError when the transformed fields are evaluated.
inline WeylGauge gauge_transform(const WeylGauge& w, const ScalarField& omega) {
  const ScalarField om = require_positive(omega);
  WeylGauge out{w.metric.scaled(om * om), {}, std::nullopt};
  for (int a = 0; a < w.metric.dim(); ++a) {
    out.phi.push_back(w.phi[static_cast<std::size_t>(a)] + om.partial(a) / om);
  }
  if (w.generator) out.generator = *w.generator + log(om);
  return out;
}

/// Γ^C_{AB} = ₉Γ^C_{AB} + g_AB φ^C − δ^C_A φ_B − δ^C_B φ_A, indexed (C,A,B).
inline DenseTensor christoffel_weyl(const WeylGauge& w, std::span<const double> y) {
  const MetricJet j = w.metric.jet(y, 1);
  DenseTensor gamma = christoffel_from_jet(j);
  const Vec phi = w.phi_at(y);
  const Vec phi_up = j.ginv * phi;
  const int n = w.metric.dim();
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        double corr = j.g(a, b) * phi_up(c);
        if (c == a) corr -= phi(b);
        if (c == b) corr -= phi(a);
        gamma(c, a, b) += corr;
      }
  return gamma;
}

/// Covariant tensor field F_{A1..Ar} with full (unsymmetrized) storage.
class TensorField {
 public:
  TensorField() = default;
  TensorField(int dim, int rank) : dim_(dim), rank_(rank) {
    std::size_t n = 1;
    for (int r = 0; r < rank; ++r) n *= static_cast<std::size_t>(dim);
    comps_.assign(n, ScalarField::constant(dim, 0.0));
  }

  static TensorField from_metric(const Metric& m) {
    TensorField t(m.dim(), 2);
    for (int a = 0; a < m.dim(); ++a)
      for (int b = 0; b < m.dim(); ++b) t.component({a, b}) = m.entry(a, b);
    return t;
  }

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  std::size_t size() const { return comps_.size(); }

  ScalarField& component(std::initializer_list<int> idx) { return comps_[offset(idx)]; }
  const ScalarField& component(std::initializer_list<int> idx) const { return comps_[offset(idx)]; }
  ScalarField& flat(std::size_t i) { return comps_[i]; }
  const ScalarField& flat(std::size_t i) const { return comps_[i]; }

  TensorField scaled(const ScalarField& s) const {
    TensorField t = *this;
    for (auto& c : t.comps_) c = s * c;
    return t;
  }

 private:
  std::size_t offset(std::initializer_list<int> idx) const {
    if (static_cast<int>(idx.size()) != rank_) throw PreconditionError("tensor index count does not match rank");
    std::size_t off = 0;
    for (int i : idx) off = off * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return off;
  }

  int dim_ = 0;
  int rank_ = 0;
  std::vector<ScalarField> comps_;
};

/// D_C F_{A1..Ar} = ∇_C F_{A1..Ar} − w φ_C F_{A1..Ar} with the Weyl
/// connection. Output rank r+1, derivative index first.
inline DenseTensor scale_covariant_derivative(const WeylGauge& gauge, const TensorField& F, int weight,
                                              std::span<const double> y) {
  const int n = gauge.metric.dim();
  if (F.dim() != n) throw PreconditionError("tensor dimension does not match the metric");
  const int r = F.rank();
  const DenseTensor gamma = christoffel_weyl(gauge, y);
  const Vec phi = gauge.phi_at(y);
  const std::size_t count = F.size();
  std::vector<double> value(count);
  std::vector<std::vector<double>> grad(count, std::vector<double>(static_cast<std::size_t>(n)));
  for (std::size_t i = 0; i < count; ++i) {
    const ScalarField& f = F.flat(i);
    if (auto c = f.constant_value()) {
      value[i] = *c;
      continue;
    }
    const auto j = f.jet<1>(y);
    value[i] = j.value();
    for (int c = 0; c < n; ++c) grad[i][static_cast<std::size_t>(c)] = j.d(c);
  }
  DenseTensor out(n, r + 1);
  std::vector<int> idx(static_cast<std::size_t>(r));
  std::vector<std::size_t> stride(static_cast<std::size_t>(r), 1);
  for (int k = r - 2; k >= 0; --k) stride[static_cast<std::size_t>(k)] = stride[static_cast<std::size_t>(k + 1)] * static_cast<std::size_t>(n);
  for (int c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t rem = i;
      for (int k = 0; k < r; ++k) {
        idx[static_cast<std::size_t>(k)] = static_cast<int>(rem / stride[static_cast<std::size_t>(k)]);
        rem %= stride[static_cast<std::size_t>(k)];
      }
      double s = grad[i][static_cast<std::size_t>(c)] - weight * phi(c) * value[i];
      for (int k = 0; k < r; ++k) {
        const int ak = idx[static_cast<std::size_t>(k)];
        const std::size_t base = i - static_cast<std::size_t>(ak) * stride[static_cast<std::size_t>(k)];
        for (int d = 0; d < n; ++d) s -= gamma(d, c, ak) * value[base + static_cast<std::size_t>(d) * stride[static_cast<std::size_t>(k)]];
      }
      out[static_cast<std::size_t>(c) * count + i] = s;
    }
  }
  return out;
}

}  // namespace nullift

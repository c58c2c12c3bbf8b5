#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nullift/dynamics/integrator.hpp"
#include "nullift/dynamics/phase.hpp"
#include "nullift/errors.hpp"
#include "nullift/fields/scalar_field.hpp"
#include "nullift/geometry/connection.hpp"
#include "nullift/geometry/metric.hpp"
#include "nullift/geometry/tensor.hpp"
#include "nullift/lifts/natural_system.hpp"

namespace nullift {

/// Totally symmetric rank-p tensor K^{A₁…A_p} with field components, stored
/// as a full N^p array. `weight` counts the Ω-power picked up by the
/// lowered representation under rescalings applied so far.
class KillingTensorField {
 public:
  KillingTensorField() = default;

  /// Components from a function of the sorted multi-index.
  KillingTensorField(int dim, int rank, const std::function<ScalarField(const std::vector<int>&)>& sorted_component,
                     std::string name = {})
      : dim_(dim), rank_(rank), name_(std::move(name)) {
    if (dim < 1 || rank < 1) throw PreconditionError("killing tensor needs dim >= 1 and rank >= 1");
    std::size_t total = 1;
    for (int r = 0; r < rank; ++r) total *= static_cast<std::size_t>(dim);
    comps_.resize(total, ScalarField::constant(dim, 0.0));
    std::vector<int> idx(static_cast<std::size_t>(rank), 0);
    for (std::size_t k = 0; k < total; ++k) {
      unravel(k, idx);
      std::vector<int> s = idx;
      std::sort(s.begin(), s.end());
      const std::size_t canon = ravel(s);
      if (canon == k) {
        ScalarField f = sorted_component(s);
        if (f.arity() != dim) throw PreconditionError("killing tensor components must be fields of the chart");
        comps_[k] = std::move(f);
      } else {
        comps_[k] = comps_[canon];
      }
    }
  }

  /// Vector field K^A.
  static KillingTensorField vector(std::vector<ScalarField> comps, std::string name = {}) {
    const int n = static_cast<int>(comps.size());
    return KillingTensorField(n, 1, [&](const std::vector<int>& i) { return comps[static_cast<std::size_t>(i[0])]; }, std::move(name));
  }

  /// Symmetric matrix field K^{AB}.
  static KillingTensorField matrix(const MatrixField& m, std::string name = {}) {
    if (m.dim() != m.arity()) throw PreconditionError("matrix entries must be fields of the chart");
    return KillingTensorField(m.dim(), 2, [&](const std::vector<int>& i) { return m(i[0], i[1]); }, std::move(name));
  }

  int dim() const { return dim_; }
  int rank() const { return rank_; }
  int weight() const { return weight_; }
  const std::string& name() const { return name_; }
  void set_weight(int w) { weight_ = w; }

  const ScalarField& component(std::span<const int> idx) const {
    if (static_cast<int>(idx.size()) != rank_) throw PreconditionError("wrong number of indices");
    std::size_t k = 0;
    for (int i : idx) k = k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return comps_[k];
  }
  const ScalarField& component_at(std::size_t flat) const { return comps_[flat]; }
  std::size_t size() const { return comps_.size(); }

  DenseTensor upper(std::span<const double> y) const {
    DenseTensor t(dim_, rank_);
    for (std::size_t k = 0; k < comps_.size(); ++k) t[k] = comps_[k].is_zero() ? 0.0 : comps_[k](y);
    return t;
  }

  /// ∂_M K^{…} at y, indexed (M, A₁, …, A_p).
  DenseTensor upper_derivative(std::span<const double> y) const {
    DenseTensor t(dim_, rank_ + 1);
    const std::size_t block = comps_.size();
    for (std::size_t k = 0; k < block; ++k) {
      const ScalarField& f = comps_[k];
      if (f.is_constant()) continue;
      const auto j = f.jet<1>(y);
      for (int m = 0; m < dim_; ++m) t[static_cast<std::size_t>(m) * block + k] = j.d(m);
    }
    return t;
  }

  void unravel(std::size_t k, std::vector<int>& idx) const {
    for (int r = rank_ - 1; r >= 0; --r) {
      idx[static_cast<std::size_t>(r)] = static_cast<int>(k % static_cast<std::size_t>(dim_));
      k /= static_cast<std::size_t>(dim_);
    }
  }

  std::size_t ravel(const std::vector<int>& idx) const {
    std::size_t k = 0;
    for (int i : idx) k = k * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(i);
    return k;
  }

 private:
  int dim_ = 0;
  int rank_ = 0;
  int weight_ = 0;
  std::string name_;
  std::vector<ScalarField> comps_;
};

namespace detail {

// Contract slot `slot` of a rank-r tensor with M: out(…, N, …) = Σ_A M(N, A) in(…, A, …).
inline DenseTensor contract_slot(const DenseTensor& in, int slot, const Mat& M) {
  const int n = in.dim(), r = in.rank();
  DenseTensor out(n, r);
  std::size_t stride = 1;
  for (int s = r - 1; s > slot; --s) stride *= static_cast<std::size_t>(n);
  const std::size_t outer = in.size() / (stride * static_cast<std::size_t>(n));
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < stride; ++i)
      for (int N = 0; N < n; ++N) {
        double s = 0.0;
        for (int A = 0; A < n; ++A) s += M(N, A) * in[(o * static_cast<std::size_t>(n) + static_cast<std::size_t>(A)) * stride + i];
        out[(o * static_cast<std::size_t>(n) + static_cast<std::size_t>(N)) * stride + i] = s;
      }
  return out;
}

inline std::vector<int> unravel(std::size_t k, int n, int r) {
  std::vector<int> idx(static_cast<std::size_t>(r));
  for (int s = r - 1; s >= 0; --s) {
    idx[static_cast<std::size_t>(s)] = static_cast<int>(k % static_cast<std::size_t>(n));
    k /= static_cast<std::size_t>(n);
  }
  return idx;
}

inline std::size_t ravel(const std::vector<int>& idx, int n) {
  std::size_t k = 0;
  for (int i : idx) k = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
  return k;
}

// Full symmetrization over all indices.
inline DenseTensor symmetrize(const DenseTensor& t) {
  const int n = t.dim(), r = t.rank();
  DenseTensor out(n, r);
  std::vector<int> perm(static_cast<std::size_t>(r));
  for (std::size_t k = 0; k < t.size(); ++k) {
    const auto idx = unravel(k, n, r);
    for (int i = 0; i < r; ++i) perm[static_cast<std::size_t>(i)] = i;
    double s = 0.0;
    int count = 0;
    do {
      std::vector<int> p(static_cast<std::size_t>(r));
      for (int i = 0; i < r; ++i) p[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      s += t[ravel(p, n)];
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out[k] = s / count;
  }
  return out;
}

// Sorted multi-indices of length r over 0..n-1.
inline std::vector<std::vector<int>> sorted_indices(int n, int r) {
  std::vector<std::vector<int>> out;
  if (r == 0) return {{}};
  std::vector<int> idx(static_cast<std::size_t>(r), 0);
  while (true) {
    out.push_back(idx);
    int s = r - 1;
    while (s >= 0 && idx[static_cast<std::size_t>(s)] == n - 1) --s;
    if (s < 0) break;
    const int v = idx[static_cast<std::size_t>(s)] + 1;
    for (int i = s; i < r; ++i) idx[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

}  // namespace detail

/// K_{N₁…N_p} = g_{N₁A₁}…g_{N_pA_p} K^{A₁…A_p} at y.
inline DenseTensor lower_indices(const Metric& m, const KillingTensorField& K, std::span<const double> y) {
  if (m.dim() != K.dim()) throw PreconditionError("metric and tensor dimensions differ");
  DenseTensor t = K.upper(y);
  const Mat g = m.matrix(y);
  for (int s = 0; s < K.rank(); ++s) t = detail::contract_slot(t, s, g);
  return t;
}

/// Norm of the part of ∇_(M K_{N₁…N_p)} outside {g_(MN₁ T_{N₂…N_p)}}, the
/// projection taken by pointwise least squares over symmetric T.
inline double killing_residual(const Metric& m, const KillingTensorField& K, std::span<const double> y) {
  const int n = m.dim(), p = K.rank();
  if (n != K.dim()) throw PreconditionError("metric and tensor dimensions differ");
  const MetricJet j = m.jet(y, 1);
  const DenseTensor Gam = christoffel_from_jet(j);
  const DenseTensor up = K.upper(y);
  const DenseTensor dup = K.upper_derivative(y);
  const std::size_t block = up.size();

  // lowered K and its partial derivatives (product rule over slots)
  DenseTensor low = up;
  for (int s = 0; s < p; ++s) low = detail::contract_slot(low, s, j.g);
  DenseTensor nabla(n, p + 1);  // (M, N₁…N_p)
  for (int M = 0; M < n; ++M) {
    DenseTensor dK(n, p);
    for (std::size_t k = 0; k < block; ++k) dK[k] = dup[static_cast<std::size_t>(M) * block + k];
    for (int s = 0; s < p; ++s) dK = detail::contract_slot(dK, s, j.g);
    for (int slot = 0; slot < p; ++slot) {
      DenseTensor term = up;
      for (int s = 0; s < p; ++s) term = detail::contract_slot(term, s, s == slot ? j.dg[static_cast<std::size_t>(M)] : j.g);
      for (std::size_t k = 0; k < block; ++k) dK[k] += term[k];
    }
    // − Σ_slot Γ^L_{M N_slot} K_{…L…}
    for (int slot = 0; slot < p; ++slot) {
      Mat GM(n, n);  // GM(N, L) = Γ^L_{M N}
      for (int N = 0; N < n; ++N)
        for (int L = 0; L < n; ++L) GM(N, L) = Gam(L, M, N);
      const DenseTensor c = detail::contract_slot(low, slot, GM);
      for (std::size_t k = 0; k < block; ++k) dK[k] -= c[k];
    }
    for (std::size_t k = 0; k < block; ++k) nabla[static_cast<std::size_t>(M) * block + k] = dK[k];
  }
  const DenseTensor S = detail::symmetrize(nabla);

  // basis sym(g ⊗ T_b)
  const auto basis_T = detail::sorted_indices(n, p - 1);
  Mat B(static_cast<Eigen::Index>(S.size()), static_cast<Eigen::Index>(basis_T.size()));
  for (std::size_t b = 0; b < basis_T.size(); ++b) {
    DenseTensor gT(n, p + 1);
    for (std::size_t k = 0; k < gT.size(); ++k) {
      const auto idx = detail::unravel(k, n, p + 1);
      std::vector<int> rest(idx.begin() + 2, idx.end());
      std::sort(rest.begin(), rest.end());
      if (rest == basis_T[b]) gT[k] = j.g(idx[0], idx[1]);
    }
    const DenseTensor sym = detail::symmetrize(gT);
    for (std::size_t k = 0; k < sym.size(); ++k) B(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(b)) = sym[k];
  }
  const Vec s = Eigen::Map<const Vec>(S.data(), static_cast<Eigen::Index>(S.size()));
  const Vec c = B.colPivHouseholderQr().solve(s);
  return (s - B * c).norm();
}

inline double killing_residual(const Metric& m, const KillingTensorField& K, const std::vector<std::vector<double>>& sample) {
  double worst = 0.0;
  for (const auto& y : sample) worst = std::max(worst, killing_residual(m, K, y));
  return worst;
}

/// C = K^{A₁…A_p} p_{A₁}…p_{A_p}.
inline double conserved_value(const KillingTensorField& K, const PhasePoint& pt) {
  if (static_cast<int>(pt.y.size()) != K.dim() || pt.p.size() != pt.y.size()) throw PreconditionError("phase point dimension does not match tensor");
  const int n = K.dim(), r = K.rank();
  double total = 0.0;
  for (std::size_t k = 0; k < K.size(); ++k) {
    const ScalarField& f = K.component_at(k);
    if (f.is_zero()) continue;
    const auto idx = detail::unravel(k, n, r);
    double prod = f(pt.y);
    for (int i : idx) prod *= pt.p[static_cast<std::size_t>(i)];
    total += prod;
  }
  return total;
}

/// max_k |C(pt_k) − C(pt_0)| over the stored samples.
inline double drift_along(const Trajectory& traj, const KillingTensorField& K) {
  if (traj.points.empty()) return 0.0;
  const double c0 = conserved_value(K, traj.points.front());
  double worst = 0.0;
  for (const auto& pt : traj.points) worst = std::max(worst, std::abs(conserved_value(K, pt) - c0));
  return worst;
}

/// Conformal Killing tensor for ḡ = Ω²g: the upper-index components are
/// unchanged and the lowered ones gain Ω^{2p}, tracked in the weight.
inline KillingTensorField rescale_killing(const KillingTensorField& K, const ScalarField& omega, int p) {
  if (p != K.rank()) throw PreconditionError("rescale_killing: p must equal the tensor rank");
  if (omega.arity() != K.dim()) throw PreconditionError("rescale_killing: Omega must be a field of the chart");
  KillingTensorField out = K;
  out.set_weight(K.weight() + 2 * p);
  return out;
}

// ------------------------------------------------------------ named tensors

/// ∂_a as a rank-1 tensor.
inline KillingTensorField translation(int dim, int a, std::string name = {}) {
  if (a < 0 || a >= dim) throw PreconditionError("translation index out of range");
  std::vector<ScalarField> c(static_cast<std::size_t>(dim), ScalarField::constant(dim, 0.0));
  c[static_cast<std::size_t>(a)] = ScalarField::constant(dim, 1.0);
  return KillingTensorField::vector(std::move(c), std::move(name));
}

/// q^i ∂_j − q^j ∂_i.
inline KillingTensorField rotation(int dim, int i, int j, std::string name = {}) {
  if (i < 0 || j < 0 || i >= dim || j >= dim || i == j) throw PreconditionError("rotation indices out of range");
  std::vector<ScalarField> c(static_cast<std::size_t>(dim), ScalarField::constant(dim, 0.0));
  c[static_cast<std::size_t>(j)] = ScalarField::coordinate(dim, i);
  c[static_cast<std::size_t>(i)] = -ScalarField::coordinate(dim, j);
  return KillingTensorField::vector(std::move(c), std::move(name));
}

/// Symmetrized product of two tensors, K₁ ⊙ K₂.
inline KillingTensorField symmetric_product(const KillingTensorField& a, const KillingTensorField& b) {
  if (a.dim() != b.dim()) throw PreconditionError("symmetric_product: dimensions differ");
  const int n = a.dim(), ra = a.rank(), rb = b.rank();
  return KillingTensorField(n, ra + rb, [&](const std::vector<int>& idx) {
    // average over the distinct splits of idx into (ra, rb) slots
    std::vector<int> sel(static_cast<std::size_t>(ra + rb), 0);
    std::fill(sel.begin() + ra, sel.end(), 1);
    ScalarField s = ScalarField::constant(n, 0.0);
    int count = 0;
    do {
      std::vector<int> ia, ib;
      for (int k = 0; k < ra + rb; ++k) (sel[static_cast<std::size_t>(k)] == 0 ? ia : ib).push_back(idx[static_cast<std::size_t>(k)]);
      const ScalarField& fa = a.component(ia);
      const ScalarField& fb = b.component(ib);
      if (!fa.is_zero() && !fb.is_zero()) s = s + fa * fb;
      ++count;
    } while (std::next_permutation(sel.begin(), sel.end()));
    return s.is_zero() ? s : s / static_cast<double>(count);
  });
}

/// Inverse ED metric g^{AB} on (q, u, v) as a rank-2 tensor:
/// g^{ij} = h^{ij}, g^{iv} = −h^{ij}A_j, g^{uv} = 1, g^{vv} = h^{ij}A_iA_j + 2V.
/// Needs h constant or n ≤ 2 (explicit inverse).
inline KillingTensorField ed_inverse_metric(const NaturalSystem& s) {
  s.validate();
  const int n = s.n, N = n + 2;
  std::vector<int> map;
  for (int k = 0; k <= n; ++k) map.push_back(k);
  const auto up = [&](const ScalarField& f) { return f.is_constant() ? ScalarField::constant(N, *f.constant_value()) : f.remap(N, map); };
  std::vector<std::vector<ScalarField>> hinv(static_cast<std::size_t>(n), std::vector<ScalarField>(static_cast<std::size_t>(n), ScalarField::constant(N, 0.0)));
  bool constant = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) constant = constant && s.h(i, j).is_constant();
  if (constant) {
    Mat h(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) h(i, j) = *s.h(i, j).constant_value();
    const Mat hi = h.inverse();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) hinv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = ScalarField::constant(N, hi(i, j));
  } else if (n == 1) {
    hinv[0][0] = 1.0 / up(s.h(0, 0));
  } else if (n == 2) {
    const ScalarField a = up(s.h(0, 0)), b = up(s.h(0, 1)), d = up(s.h(1, 1));
    const ScalarField det = a * d - b * b;
    hinv[0][0] = d / det;
    hinv[1][1] = a / det;
    hinv[0][1] = hinv[1][0] = -1.0 * b / det;
  } else {
    throw PreconditionError("ed_inverse_metric needs a constant h or n <= 2");
  }
  std::vector<ScalarField> A;
  for (int i = 0; i < n; ++i) A.push_back(s.e * up(s.A_component(i)));
  const ScalarField V = s.e * s.e * up(s.V);
  const int u = n, v = n + 1;
  return KillingTensorField(N, 2, [&](const std::vector<int>& idx) {
    const int a = idx[0], b = idx[1];
    if (b < n) return hinv[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    if (a < n && b == v) {
      ScalarField s2 = ScalarField::constant(N, 0.0);
      for (int k = 0; k < n; ++k)
        if (!A[static_cast<std::size_t>(k)].is_zero()) s2 = s2 - hinv[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] * A[static_cast<std::size_t>(k)];
      return s2;
    }
    if (a == u && b == v) return ScalarField::constant(N, 1.0);
    if (a == v && b == v) {
      ScalarField s2 = 2.0 * V;
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
          if (!A[static_cast<std::size_t>(i)].is_zero() && !A[static_cast<std::size_t>(k)].is_zero())
            s2 = s2 + hinv[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * A[static_cast<std::size_t>(i)] * A[static_cast<std::size_t>(k)];
      return s2;
    }
    return ScalarField::constant(N, 0.0);
  }, "inverse metric");
}

/// Named conserved quantities on an ED chart (q, u, v) of dimension N = n + 2:
/// "p_v", "p_u", "angular_momentum" (q¹∂₂ − q²∂₁, n ≥ 2).
inline KillingTensorField named_killing(const std::string& name, int n) {
  const int N = n + 2;
  if (name == "p_v") return translation(N, n + 1, "p_v");
  if (name == "p_u") return translation(N, n, "p_u");
  if (name == "angular_momentum") {
    if (n < 2) throw PreconditionError("angular_momentum needs n >= 2");
    return rotation(N, 0, 1, "angular_momentum");
  }
  throw PreconditionError("unknown conserved quantity '" + name + "'");
}

inline const std::vector<std::string>& named_killing_names() {
  static const std::vector<std::string> names{"p_v", "p_u", "angular_momentum"};
  return names;
}

}  // namespace nullift

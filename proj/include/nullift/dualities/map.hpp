#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nullift/dynamics/integrator.hpp"
#include "nullift/dynamics/phase.hpp"
#include "nullift/errors.hpp"
#include "nullift/fields/scalar_field.hpp"
#include "nullift/geometry/metric.hpp"
#include "nullift/geometry/schwarzian.hpp"
#include "nullift/lifts/natural_system.hpp"

namespace nullift {

/// Diffeomorphism y ↦ ȳ(y) of a lift chart with symbolic Jacobian
/// J^A_B = ∂ȳ^A/∂y^B. ν is the Bargmann scale (f_*∂_v = ∂_v/ν) when the map
/// is declared Bargmann-preserving.
class DualityMap {
 public:
  DualityMap() = default;
  DualityMap(std::string name, std::vector<ScalarField> forward, std::optional<std::vector<ScalarField>> inverse = std::nullopt,
             double nu = 1.0, bool bargmann = false)
      : name_(std::move(name)), forward_(std::move(forward)), inverse_(std::move(inverse)), nu_(nu), bargmann_(bargmann) {
    const int N = dim();
    if (N == 0) throw PreconditionError("duality map needs at least one component");
    for (const auto& f : forward_)
      if (f.arity() != N) throw PreconditionError("map components must be fields of the source chart");
    if (inverse_) {
      if (static_cast<int>(inverse_->size()) != N) throw PreconditionError("inverse map must have as many components as the forward map");
      for (const auto& f : *inverse_)
        if (f.arity() != N) throw PreconditionError("inverse components must be fields of the target chart");
    }
    if (nu_ == 0.0) throw PreconditionError("nu must be nonzero");
    jac_.resize(static_cast<std::size_t>(N * N));
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) jac_[static_cast<std::size_t>(a * N + b)] = forward_[static_cast<std::size_t>(a)].partial(b);
  }

  static DualityMap identity(int N) {
    std::vector<ScalarField> f;
    for (int a = 0; a < N; ++a) f.push_back(ScalarField::coordinate(N, a));
    return DualityMap("identity", f, f, 1.0, true);
  }

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(forward_.size()); }
  double nu() const { return nu_; }
  bool bargmann() const { return bargmann_; }
  bool has_inverse() const { return inverse_.has_value(); }
  const std::vector<ScalarField>& forward() const { return forward_; }
  const std::optional<std::vector<ScalarField>>& inverse_fields() const { return inverse_; }
  const ScalarField& jacobian_field(int a, int b) const { return jac_[static_cast<std::size_t>(a * dim() + b)]; }

  std::vector<double> apply(std::span<const double> y) const {
    check(y);
    std::vector<double> out(forward_.size());
    for (std::size_t a = 0; a < forward_.size(); ++a) out[a] = forward_[a](y);
    return out;
  }

  /// J(y), checked invertible.
  Mat jacobian(std::span<const double> y) const {
    check(y);
    const int N = dim();
    Mat J(N, N);
    for (int a = 0; a < N; ++a)
      for (int b = 0; b < N; ++b) J(a, b) = jac_[static_cast<std::size_t>(a * N + b)](y);
    if (!J.allFinite()) throw SingularMetricError("map Jacobian is not finite");
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-300) throw SingularMetricError("map Jacobian is singular");
    return J;
  }

  /// y with ȳ(y) = ybar: closed-form inverse when available, otherwise damped
  /// Newton from `guess` (default ybar), tolerance 1e-12, at most 50 steps.
  std::vector<double> invert(std::span<const double> ybar, std::optional<std::vector<double>> guess = std::nullopt) const {
    check(ybar);
    if (inverse_) {
      std::vector<double> out(inverse_->size());
      for (std::size_t a = 0; a < inverse_->size(); ++a) out[a] = (*inverse_)[a](ybar);
      return out;
    }
    return newton_invert(ybar, guess ? *guess : std::vector<double>(ybar.begin(), ybar.end()));
  }

  std::vector<double> newton_invert(std::span<const double> ybar, std::vector<double> x) const {
    const Vec target = Eigen::Map<const Vec>(ybar.data(), dim());
    const auto residual = [&](const std::vector<double>& y) { return (Eigen::Map<const Vec>(apply(y).data(), dim()) - target).eval(); };
    const double scale = 1.0 + target.cwiseAbs().maxCoeff();
    Vec r = residual(x);
    for (int it = 0; it < 50; ++it) {
      if (r.cwiseAbs().maxCoeff() <= 1e-12 * scale) return x;
      const Vec step = jacobian(x).fullPivLu().solve(r);
      double alpha = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 30; ++ls) {
        std::vector<double> trial(x);
        for (int a = 0; a < dim(); ++a) trial[static_cast<std::size_t>(a)] -= alpha * step(a);
        try {
          const Vec rt = residual(trial);
          if (rt.norm() < r.norm() || rt.cwiseAbs().maxCoeff() <= 1e-12 * scale) {
            x = std::move(trial);
            r = rt;
            improved = true;
            break;
          }
        } catch (const Error&) {
        }
        alpha *= 0.5;
      }
      if (!improved) break;
    }
    if (r.cwiseAbs().maxCoeff() <= 1e-12 * scale) return x;
    throw DomainError("Newton inversion of map '" + name_ + "' did not converge");
  }

 private:
  void check(std::span<const double> y) const {
    if (static_cast<int>(y.size()) != dim()) throw PreconditionError("point dimension does not match map dimension");
  }

  std::string name_;
  std::vector<ScalarField> forward_;
  std::optional<std::vector<ScalarField>> inverse_;
  double nu_ = 1.0;
  bool bargmann_ = false;
  std::vector<ScalarField> jac_;
};

/// (f*ḡ)(y) = J(y)ᵀ ḡ(ȳ(y)) J(y).
inline Mat pullback_metric(const DualityMap& map, const Metric& target, std::span<const double> y) {
  if (target.dim() != map.dim()) throw PreconditionError("target metric dimension does not match map");
  const Mat J = map.jacobian(y);
  const auto ybar = map.apply(y);
  return J.transpose() * target.matrix(ybar) * J;
}

/// Largest violation of ∂ȳ^i/∂v = 0, ∂ȳ^u/∂v = 0, ∂ȳ^v/∂v = 1/ν and
/// J^u_(i) = 0 over the sample (coordinates (q, u, v)).
inline double bargmann_residual(const DualityMap& map, const PointSet& sample) {
  const int N = map.dim(), n = N - 2;
  if (n < 1) throw PreconditionError("Bargmann structure needs coordinates (q, u, v)");
  double worst = 0.0;
  for (const auto& y : sample) {
    const Mat J = map.jacobian(y);
    for (int a = 0; a < N; ++a) worst = std::max(worst, std::abs(J(a, n + 1) - (a == n + 1 ? 1.0 / map.nu() : 0.0)));
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(J(n, i)));
  }
  return worst;
}

/// Ω², h, V, A read off f*ḡ = Ω² (h dq dq + 2du(dv − V du + A dq)).
/// Fields live on the source chart (q, u, v).
struct EDExtraction {
  ScalarField Omega2;
  MatrixField h;
  ScalarField V;
  std::vector<ScalarField> A;
  double residual = 0.0;  // worst |g_vv|, |g_iv| over the sample

  /// The extracted data as a natural system over (q, u), read at v = 0.
  NaturalSystem to_natural_system(double e = 1.0) const {
    const int N = V.arity(), n = N - 2;
    std::vector<ScalarField> args;
    for (int k = 0; k <= n; ++k) args.push_back(ScalarField::coordinate(n + 1, k));
    args.push_back(ScalarField::constant(n + 1, 0.0));
    const auto restrict_v = [&](const ScalarField& f) { return compose(f, args); };
    NaturalSystem s;
    s.n = n;
    s.e = e;
    s.name = "extracted";
    s.h = MatrixField(n, n + 1);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) s.h.set(i, j, restrict_v(h(i, j)));
    s.V = restrict_v(V);
    for (const auto& a : A) s.A.push_back(restrict_v(a));
    return s;
  }
};

namespace detail {

// Symbolic f*ḡ entries: Σ ḡ_AB(ȳ(y)) J^A_C J^B_D.
inline std::vector<ScalarField> symbolic_pullback(const DualityMap& map, const Metric& target) {
  const int N = map.dim();
  std::vector<ScalarField> gbar;
  gbar.reserve(static_cast<std::size_t>(N * N));
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      const ScalarField& e = target.entry(a, b);
      gbar.push_back(e.is_constant() ? ScalarField::constant(N, *e.constant_value()) : compose(e, map.forward()));
    }
  std::vector<ScalarField> P(static_cast<std::size_t>(N * N), ScalarField::constant(N, 0.0));
  for (int c = 0; c < N; ++c)
    for (int d = c; d < N; ++d) {
      ScalarField s = ScalarField::constant(N, 0.0);
      for (int a = 0; a < N; ++a) {
        const ScalarField& Jac = map.jacobian_field(a, c);
        if (Jac.is_zero()) continue;
        for (int b = 0; b < N; ++b) {
          const ScalarField& g = gbar[static_cast<std::size_t>(a * N + b)];
          const ScalarField& Jbd = map.jacobian_field(b, d);
          if (g.is_zero() || Jbd.is_zero()) continue;
          s = s + g * Jac * Jbd;
        }
      }
      P[static_cast<std::size_t>(c * N + d)] = P[static_cast<std::size_t>(d * N + c)] = s;
    }
  return P;
}

}  // namespace detail

/// Check the ED-form constraints on the sample and extract (Ω², h, V, A).
/// Throws ConstraintViolation naming the worst point and component.
inline EDExtraction extract_ed_form(const DualityMap& map, const Metric& target, const PointSet& sample, double tol = 1e-9) {
  const int N = map.dim(), n = N - 2;
  if (n < 1) throw PreconditionError("extract_ed_form needs coordinates (q, u, v)");
  if (sample.empty()) throw PreconditionError("extract_ed_form needs a nonempty sample");
  double worst = 0.0;
  std::string where;
  for (const auto& y : sample) {
    const Mat P = pullback_metric(map, target, y);
    const auto note = [&](double v, const std::string& comp) {
      if (std::abs(v) > worst) {
        worst = std::abs(v);
        std::ostringstream os;
        os << comp << " at (";
        for (std::size_t k = 0; k < y.size(); ++k) os << (k ? ", " : "") << y[k];
        os << ")";
        where = os.str();
      }
    };
    note(P(n + 1, n + 1), "g_vv");
    for (int i = 0; i < n; ++i) note(P(i, n + 1), "g_q" + std::to_string(i + 1) + "v");
  }
  if (worst > tol) {
    std::ostringstream os;
    os << "pullback is not of Eisenhart-Duval form: |" << where << "| = " << worst << " > " << tol;
    throw ConstraintViolation(os.str());
  }
  const auto P = detail::symbolic_pullback(map, target);
  const auto at = [&](int a, int b) { return P[static_cast<std::size_t>(a * N + b)]; };
  EDExtraction ex;
  ex.residual = worst;
  ex.Omega2 = at(n, n + 1);
  for (const auto& y : sample)
    if (!(ex.Omega2(y) > 0.0)) throw ConstraintViolation("extracted conformal factor is not positive on the sample");
  const ScalarField W = require_positive(ex.Omega2);
  ex.h = MatrixField(n, N);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) ex.h.set(i, j, at(i, j) / W);
  ex.V = -at(n, n) / (2.0 * W);
  for (int i = 0; i < n; ++i) ex.A.push_back(at(i, n) / W);
  // h, V, A must be functions of (q, u) alone
  const std::vector<int> dv{n + 1};
  double drift = 0.0;
  std::string which;
  const auto probe = [&](const ScalarField& fld, const std::string& label, std::span<const double> y) {
    const double d = std::abs(fld.derivative(y, dv));
    if (d > drift) {
      drift = d;
      which = label;
    }
  };
  for (const auto& y : sample) {
    probe(ex.V, "V", y);
    for (int i = 0; i < n; ++i) {
      probe(ex.A[static_cast<std::size_t>(i)], "A_" + std::to_string(i + 1), y);
      for (int j = i; j < n; ++j) probe(ex.h(i, j), "h_" + std::to_string(i + 1) + std::to_string(j + 1), y);
    }
  }
  if (drift > tol) {
    std::ostringstream os;
    os << "pullback is not of Eisenhart-Duval form: " << which << " depends on v (|d/dv| = " << drift << " > " << tol << ")";
    throw ConstraintViolation(os.str());
  }
  return ex;
}

// ------------------------------------------------------------ phase transport

enum class MapDirection { kForward, kInverse };

/// Forward: ȳ = f(y), p̄ = J⁻ᵀ p. Inverse: y = f⁻¹(ȳ), p = Jᵀ p̄.
/// 𝓗 changes by the conformal factor: 𝓗_ḡ(ȳ, p̄) = Ω⁻² 𝓗_g(y, p).
inline PhasePoint map_phase_point(const DualityMap& map, const PhasePoint& pt, MapDirection dir,
                                  std::optional<std::vector<double>> guess = std::nullopt) {
  if (dir == MapDirection::kForward) {
    const Mat J = map.jacobian(pt.y);
    const Vec pbar = J.transpose().fullPivLu().solve(as_vec(pt.p));
    return {map.apply(pt.y), to_std(pbar)};
  }
  const auto y = map.invert(pt.y, std::move(guess));
  const Mat J = map.jacobian(y);
  return {y, to_std(J.transpose() * as_vec(pt.p))};
}

/// Pointwise image of a trajectory; the parameter is kept. When `metric` is
/// given (the metric of the image chart), 𝓗 is recomputed there.
inline Trajectory map_phase_trajectory(const DualityMap& map, const Trajectory& traj, MapDirection dir,
                                       const Metric* metric = nullptr) {
  Trajectory out;
  out.lambda = traj.lambda;
  std::optional<std::vector<double>> guess;
  for (const auto& pt : traj.points) {
    PhasePoint m = map_phase_point(map, pt, dir, guess);
    if (!m.finite()) throw DomainError("map produced a non-finite point");
    if (dir == MapDirection::kInverse && !map.has_inverse()) guess = m.y;
    const double H = metric ? hamiltonian_value(*metric, m) : std::numeric_limits<double>::quiet_NaN();
    out.h_values.push_back(H);
    if (metric) out.diagnostics.max_abs_h = std::max(out.diagnostics.max_abs_h, std::abs(H));
    out.points.push_back(std::move(m));
  }
  return out;
}

// ------------------------------------------------------------ classification

enum class DualityClass { kDynamicalSymmetry, kProjectiveDuality, kNotEquivalent };

inline const char* to_string(DualityClass c) {
  switch (c) {
    case DualityClass::kDynamicalSymmetry: return "dynamical-symmetry";
    case DualityClass::kProjectiveDuality: return "projective-duality";
    case DualityClass::kNotEquivalent: return "not-equivalent";
  }
  return "?";
}

struct Classification {
  DualityClass verdict = DualityClass::kNotEquivalent;
  double proportionality_residual = 0.0;  // worst |f*ḡ − Ω²g| / |f*ḡ|
  double same_class_residual = 0.0;       // worst |ḡ − c g| / |ḡ| at equal coordinates
  double omega2_min = 0.0;
  double omega2_max = 0.0;
};

namespace detail {

// Least-squares scalar c with A ≈ c B, and the relative residual.
inline std::pair<double, double> proportionality(const Mat& A, const Mat& B) {
  const double bb = (B.array() * B.array()).sum();
  if (bb == 0.0) return {0.0, std::numeric_limits<double>::infinity()};
  const double c = (A.array() * B.array()).sum() / bb;
  const double scale = std::max(A.cwiseAbs().maxCoeff(), 1e-300);
  return {c, (A - c * B).cwiseAbs().maxCoeff() / scale};
}

}  // namespace detail

/// f*ḡ ∝ g on the sample (single positive Ω² per point) decides equivalence;
/// then [g] = [ḡ] as coordinate metrics separates a symmetry from a duality.
inline Classification classify_duality(const DualityMap& map, const Metric& source, const Metric& target, const PointSet& sample,
                                       double tol = 1e-8) {
  if (sample.empty()) throw PreconditionError("classify_duality needs a nonempty sample");
  Classification c;
  c.omega2_min = std::numeric_limits<double>::infinity();
  c.omega2_max = -std::numeric_limits<double>::infinity();
  bool positive = true;
  for (const auto& y : sample) {
    const Mat g = source.matrix(y);
    Mat P;
    try {
      P = pullback_metric(map, target, y);
    } catch (const Error&) {
      c.proportionality_residual = std::numeric_limits<double>::infinity();
      break;
    }
    const auto [w2, res] = detail::proportionality(P, g);
    c.proportionality_residual = std::max(c.proportionality_residual, res);
    c.omega2_min = std::min(c.omega2_min, w2);
    c.omega2_max = std::max(c.omega2_max, w2);
    if (!(w2 > 0.0)) positive = false;
    double same = std::numeric_limits<double>::infinity();
    try {
      same = detail::proportionality(target.matrix(y), g).second;
    } catch (const Error&) {
    }
    c.same_class_residual = std::max(c.same_class_residual, same);
  }
  if (!(c.proportionality_residual <= tol) || !positive) {
    c.verdict = DualityClass::kNotEquivalent;
  } else if (c.same_class_residual <= tol) {
    c.verdict = DualityClass::kDynamicalSymmetry;
  } else {
    c.verdict = DualityClass::kProjectiveDuality;
  }
  return c;
}

}  // namespace nullift

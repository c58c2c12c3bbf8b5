#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <string>
#include <vector>

#include "nullift/cli/report.hpp"
#include "nullift/cli/scenario.hpp"
#include "nullift/dualities.hpp"
#include "nullift/dynamics.hpp"
#include "nullift/geometry.hpp"
#include "nullift/invariants.hpp"
#include "nullift/lifts.hpp"
#include "nullift/quantum.hpp"

namespace nullift::cli {

/// Reduced trajectory as `t,q1..qn,p1..pn,E`.
inline void export_plotdata(const BaseTrajectory& base, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  const std::size_t n = base.q.empty() ? 0 : base.q.front().size();
  out << 't';
  for (std::size_t i = 1; i <= n; ++i) out << ",q" << i;
  for (std::size_t i = 1; i <= n; ++i) out << ",p" << i;
  out << ",E\n" << std::setprecision(17);
  for (std::size_t k = 0; k < base.size(); ++k) {
    out << base.t[k];
    for (double x : base.q[k]) out << ',' << x;
    for (double x : base.p[k]) out << ',' << x;
    out << ',' << base.energy[k] << '\n';
  }
  if (!out) throw Error("write failed for " + path);
}

inline BaseTrajectory export_plotdata(const Trajectory& traj, const LiftedSystem& L, const std::string& path, double t0 = 0.0) {
  BaseTrajectory base = reduce_trajectory(traj, L, t0);
  export_plotdata(base, path);
  return base;
}

/// Conserved quantity `name` in the coordinates of lift L.
inline KillingTensorField chart_killing(const std::string& name, const LiftedSystem& L) {
  const int N = L.dim(), n = L.n;
  if (name == "angular_momentum") {
    if (n < 2) throw PreconditionError("angular_momentum needs n >= 2");
    return rotation(N, 0, 1, name);
  }
  if (L.kind == LiftKind::kCcm) throw PreconditionError(name + " is not defined on the ccm chart");
  if (name == "p_v") return translation(N, n + 1, name);
  if (name == "p_u") return translation(N, n, name);
  throw PreconditionError("unknown conserved quantity '" + name + "'");
}

namespace detail {

inline PointSet subsample(const Trajectory& traj, std::size_t count) {
  PointSet out;
  if (traj.points.empty()) return out;
  const std::size_t m = traj.points.size();
  count = std::min(count, m);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t idx = count == 1 ? 0 : k * (m - 1) / (count - 1);
    out.push_back(traj.points[idx].y);
  }
  return out;
}

inline std::string sci(double x) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(3) << x;
  return s.str();
}

inline ScalarField smooth_omega(int N, std::mt19937& rng) {
  std::uniform_real_distribution<double> amp(-0.2, 0.2), freq(0.5, 1.5), phase(0.0, 3.0);
  ScalarField s = ScalarField::constant(N, 1.0);
  for (int k = 0; k < N; ++k) {
    const double a = amp(rng), w = freq(rng), ph = phase(rng);
    s = s + a * sin(w * ScalarField::coordinate(N, k) + ph);
  }
  return s;
}

inline ScalarField quadratic_psi(int N, std::mt19937& rng) {
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  ScalarField s = ScalarField::constant(N, c(rng));
  for (int a = 0; a < N; ++a) {
    s = s + c(rng) * ScalarField::coordinate(N, a);
    for (int b = a; b < N; ++b) s = s + c(rng) * ScalarField::coordinate(N, a) * ScalarField::coordinate(N, b);
  }
  return s;
}

inline std::filesystem::path output_dir(const Scenario& sc) {
  if (const char* env = std::getenv("NULLIFT_OUTPUT_DIR"); env && *env) return std::filesystem::path(env) / sc.name;
  return sc.output.dir;
}

}  // namespace detail

/// Integrate, reduce, export and run the requested checks. Module errors are
/// recorded as failed checks; the remaining checks still run.
inline Report run_scenario(const Scenario& sc, bool write_files = true) {
  Report rep;
  rep.scenario = sc.name;
  rep.config_path = sc.path;
  rep.digest = sc.digest;
  rep.timestamp = utc_timestamp();
  const LiftedSystem& L = sc.lift;
  const int N = L.dim();

  const auto guarded = [&](const std::string& name, double tol, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      rep.fail(name, tol, e.what());
    }
  };

  std::filesystem::path dir;
  if (write_files) {
    dir = detail::output_dir(sc);
    std::filesystem::create_directories(dir);
  }

  PhasePoint start;
  std::optional<Trajectory> traj;
  IntegratorConfig cfg = sc.integrate.config;
  guarded("integrate", 0.0, [&] {
    start = sc.initial.raw ? *sc.initial.raw : lift_initial_data(L, sc.initial.q, sc.initial.p, sc.initial.t0);
    const IntegratorConfig base = lift_integrator_config(L, lambda_for_duration(L, sc.integrate.duration), cfg.null_projection);
    cfg.lambda_end = base.lambda_end;
    cfg.projection_index = base.projection_index;
    cfg.monitored_momenta = base.monitored_momenta;
    traj = integrate_null_geodesic(L.metric, start, cfg);
  });

  if (traj && write_files) {
    guarded("export", 0.0, [&] {
      const auto p = (dir / sc.output.trajectory).string();
      write_trajectory_csv(*traj, p);
      rep.outputs["trajectory"] = p;
      const auto q = (dir / sc.output.plotdata).string();
      export_plotdata(*traj, L, q, sc.initial.raw ? 0.0 : sc.initial.t0);
      rep.outputs["plotdata"] = q;
    });
  }

  const PointSet sample = traj ? detail::subsample(*traj, 12) : PointSet{};
  for (const CheckSpec& c : sc.checks) {
    if (!traj) {
      rep.fail(c.name, c.tolerance, "no trajectory");
      continue;
    }
    guarded(c.name, c.tolerance, [&] {
      if (c.name == "null-drift") {
        double worst = 0.0;
        for (double h : traj->h_values) worst = std::max(worst, std::abs(h));
        rep.add({c.name, worst <= c.tolerance, worst, c.tolerance, "max |H| over " + std::to_string(traj->size()) + " samples"});
      } else if (c.name.rfind("conserved:", 0) == 0) {
        const KillingTensorField K = chart_killing(c.name.substr(10), L);
        const double d = drift_along(*traj, K);
        rep.add({c.name, d <= c.tolerance, d, c.tolerance, "drift of " + K.name()});
      } else if (c.name == "killing-residual") {
        std::vector<std::string> names;
        for (const auto& o : sc.checks)
          if (o.name.rfind("conserved:", 0) == 0) names.push_back(o.name.substr(10));
        if (names.empty()) names.push_back("p_v");
        double worst = 0.0;
        std::string which;
        for (const auto& nm : names) {
          worst = std::max(worst, killing_residual(L.metric, chart_killing(nm, L), sample));
          which += (which.empty() ? "" : ",") + nm;
        }
        rep.add({c.name, worst <= c.tolerance, worst, c.tolerance, "max over " + which});
      } else if (c.name == "duality-match") {
        if (L.kind != LiftKind::kEisenhartDuval) throw PreconditionError("duality-match needs an eisenhart-duval source lift");
        const TransformSpec& t = *sc.transform;
        const LiftedSystem target = eisenhart_duval_lift(*t.target);
        const Classification cls = classify_duality(t.map, L.metric, target.metric, sample);
        const TransportCheck tc = transport_check(t.map, L.metric, target.metric, start, cfg);
        const bool conformal = cls.proportionality_residual <= 1e-7;
        std::string detail = "hausdorff; pullback residual " + detail::sci(cls.proportionality_residual) + ", " + to_string(cls.verdict) +
                             ", |H| on image " + detail::sci(tc.max_abs_h);
        rep.add({c.name, conformal && tc.hausdorff <= c.tolerance, tc.hausdorff, c.tolerance, detail});
      } else if (c.name == "mobius") {
        const MobiusCheck m = is_mobius_time_map(L.metric, sc.transform->params->phi, L.n, sample, c.tolerance);
        rep.add({c.name, m.mobius, m.residual, c.tolerance, "Schwarzian tensor of the time map"});
      } else if (c.name == "yamabe-covariance") {
        const YamabeContext ctx(L.metric);
        std::mt19937 rng(20240611);
        PointSet pts(sample.begin(), sample.begin() + std::min<std::size_t>(sample.size(), 5));
        double worst = 0.0;
        for (int trial = 0; trial < 5; ++trial) {
          const ScalarField Om = detail::smooth_omega(N, rng);
          const ScalarField Psi = detail::quadratic_psi(N, rng);
          worst = std::max(worst, yamabe_covariance_residual(ctx, Om, Psi, pts));
        }
        rep.add({c.name, worst <= c.tolerance, worst, c.tolerance, "5 random (Omega, Psi), w_L = " + detail::sci(ctx.weight())});
        // constant rescaling pins the left weight
        const ScalarField c17 = ScalarField::constant(N, 1.7);
        const ScalarField Psi = detail::quadratic_psi(N, rng);
        const double good = yamabe_covariance_residual(ctx, c17, Psi, pts);
        const double bad = yamabe_covariance_residual(YamabeContext(L.metric, 1.0, 1.0, ctx.field_weight()), c17, Psi, pts);
        rep.add({"yamabe-calibration", good <= 1e-9 && bad > 1e-3, good, 1e-9,
                 "constant Omega: residual " + detail::sci(bad) + " at w_L = (N-2)/2"});
        rep.notes.push_back("Yamabe covariance needs left weight (N+2)/2; the exponent (N-2)/2 fails the constant-rescaling test");
      }
    });
  }

  if (write_files) {
    const auto base = (dir / sc.output.report).string();
    rep.outputs["report"] = base + ".json";
    std::ofstream(base + ".json") << std::setw(2) << rep.to_json() << '\n';
    std::ofstream(base + ".txt") << rep.to_text();
  }
  return rep;
}

}  // namespace nullift::cli

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nullift/dualities.hpp"
#include "nullift/dynamics.hpp"
#include "nullift/lifts.hpp"

using namespace nullift;

namespace {

std::mt19937 rng(77031);

double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

PointSet sample_chart(int n, int count, double ulo, double uhi, double qmax = 1.0) {
  PointSet s;
  for (int k = 0; k < count; ++k) {
    std::vector<double> y;
    for (int i = 0; i < n; ++i) y.push_back(uniform(-qmax, qmax));
    y.push_back(uniform(ulo, uhi));
    y.push_back(uniform(-1.0, 1.0));
    s.push_back(y);
  }
  return s;
}

Metric lift_metric(const NaturalSystem& s) { return eisenhart_duval_lift(s).metric; }

ScalarField parse_phi(const std::string& text) { return parse_scalar_field(text, std::vector<std::string>{"u"}); }

SchrodingerGroupElement random_element(int n) {
  SchrodingerGroupElement el = SchrodingerGroupElement::identity(n);
  const double th = uniform(-3.0, 3.0);
  if (n == 2) el.A << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  for (int i = 0; i < n; ++i) {
    el.b(i) = uniform(-1.0, 1.0);
    el.c(i) = uniform(-1.0, 1.0);
  }
  el.d = uniform(0.8, 1.3);
  el.e = uniform(-0.5, 0.5);
  el.f = uniform(-0.3, 0.3);
  el.g = (1.0 + el.e * el.f) / el.d;
  el.h = uniform(-1.0, 1.0);
  return el;
}

// Max difference of extracted and predicted data on the sample.
double compare(const EDExtraction& a, const EDExtraction& b, const PointSet& sample, int n) {
  double worst = 0.0;
  for (const auto& y : sample) {
    worst = std::max(worst, std::abs(a.Omega2(y) - b.Omega2(y)));
    worst = std::max(worst, std::abs(a.V(y) - b.V(y)));
    for (int i = 0; i < n; ++i) {
      const double ai = a.A.empty() ? 0.0 : a.A[static_cast<std::size_t>(i)](y);
      const double bi = b.A.empty() ? 0.0 : b.A[static_cast<std::size_t>(i)](y);
      worst = std::max(worst, std::abs(ai - bi));
      for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(a.h(i, j)(y) - b.h(i, j)(y)));
    }
  }
  return worst;
}

struct CatalogCase {
  std::string name;
  MapParams params;
  NaturalSystem target;
  double ulo, uhi;
};

std::vector<CatalogCase> catalog_cases() {
  std::vector<CatalogCase> cases;
  {
    MapParams p;
    p.n = 2;
    p.phi = parse_phi("u^3 + u");
    cases.push_back({"dark_energy", p, custom_system(2, {}, "q1^2 + 0.3*q2*sin(u) + q1*q2"), -1.0, 1.0});
  }
  {
    MapParams p;
    p.n = 2;
    p.phi = parse_phi("exp(u)");
    p.h = Mat(2, 2);
    p.h << 2.0, 0.3, 0.3, 1.0;
    cases.push_back({"em_field", p, custom_system(2, {{"2", "0.3"}, {"0.3", "1"}}, "q1*q2 + u", {"q2", "sin(u)*q1"}), -1.0, 1.0});
  }
  {
    MapParams p;
    p.n = 2;
    p.phi = parse_phi("-1/u");
    p.phi_sign = 1;
    cases.push_back({"dark_energy", p, custom_system(2, {}, "q1^2/2 + q2^2"), 0.5, 2.0});
  }
  {
    MapParams p;
    p.n = 2;
    p.a = 1.5;
    p.b = 2.0;
    p.c = 0.3;
    p.d = 0.1;
    cases.push_back({"dirac_gravity", p, custom_system(2, {}, "-1/sqrt(q1^2 + q2^2 + 0.5)", {"0.2*q2", "u"}), -1.0, 1.0});
  }
  {
    MapParams p;
    p.n = 2;
    p.group = random_element(2);
    p.group.f = 0.25;
    p.group.g = (1.0 + p.group.e * p.group.f) / p.group.d;
    cases.push_back({"schrodinger_group", p, builtin_system("free", {{"n", 2}}), -1.0, 1.0});
  }
  return cases;
}

}  // namespace

// ------------------------------------------------------------ pullback and extraction

TEST(DualityMap, IdentityPullback) {
  const NaturalSystem s = custom_system(2, {}, "q1^2 + q2*u", {"q2", "0"});
  const Metric g = lift_metric(s);
  const DualityMap id = DualityMap::identity(4);
  for (const auto& y : sample_chart(2, 20, -1.0, 1.0)) EXPECT_LT((pullback_metric(id, g, y) - g.matrix(y)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DualityMap, ScalingQuadruplesFlatMetric) {
  const Metric g = lift_metric(builtin_system("free", {{"n", 2}}));
  std::vector<ScalarField> f;
  for (int a = 0; a < 4; ++a) f.push_back(2.0 * ScalarField::coordinate(4, a));
  const DualityMap scale("scale", f);
  for (const auto& y : sample_chart(2, 10, -1.0, 1.0)) EXPECT_LT((pullback_metric(scale, g, y) - 4.0 * g.matrix(y)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(classify_duality(scale, g, g, sample_chart(2, 10, -1.0, 1.0)).verdict, DualityClass::kDynamicalSymmetry);
}

TEST(DualityMap, JacobianAndInverse) {
  MapParams p;
  p.n = 2;
  p.a = 1.5;
  p.b = 2.0;
  p.c = 0.3;
  p.d = 0.1;
  const DualityMap f = build_named_map("dirac_gravity", p);
  ASSERT_TRUE(f.has_inverse());
  for (const auto& y : sample_chart(2, 20, -1.0, 1.0)) {
    const auto yb = f.apply(y);
    const auto back = f.invert(yb);
    for (int a = 0; a < 4; ++a) EXPECT_NEAR(back[static_cast<std::size_t>(a)], y[static_cast<std::size_t>(a)], 1e-12);
    const auto newton = f.newton_invert(yb, {0.0, 0.0, 0.0, 0.0});
    for (int a = 0; a < 4; ++a) EXPECT_NEAR(newton[static_cast<std::size_t>(a)], y[static_cast<std::size_t>(a)], 1e-10);
    // finite-difference Jacobian
    const Mat J = f.jacobian(y);
    for (int b = 0; b < 4; ++b) {
      auto yp = y, ym = y;
      yp[static_cast<std::size_t>(b)] += 1e-6;
      ym[static_cast<std::size_t>(b)] -= 1e-6;
      const auto fp = f.apply(yp), fm = f.apply(ym);
      for (int a = 0; a < 4; ++a) EXPECT_NEAR(J(a, b), (fp[static_cast<std::size_t>(a)] - fm[static_cast<std::size_t>(a)]) / 2e-6, 1e-7);
    }
  }
}

TEST(DualityMap, DiracPullbackIsConformalToConstantCoupling) {
  const double a = 1.5, b = 2.0, c = 0.3, d = 0.1;
  MapParams p;
  p.n = 2;
  p.a = a;
  p.b = b;
  p.c = c;
  p.d = d;
  const DualityMap f = build_named_map("dirac_gravity", p);
  const Metric target = lift_metric(dirac_time_dependent_kepler(2, 1.0, 1.0, a, c));
  const Metric source = lift_metric(builtin_system("kepler", {{"G0", 1.0}, {"M", 1.0}}));
  for (const auto& y : sample_chart(2, 30, -1.0, 1.0)) {
    const double Om = a / (y[2] + b);
    EXPECT_LT((pullback_metric(f, target, y) - Om * Om * source.matrix(y)).cwiseAbs().maxCoeff(), 1e-8);
  }
  EXPECT_LT(bargmann_residual(f, sample_chart(2, 10, -1.0, 1.0)), 1e-12);
}

TEST(DualityMap, ExtractionMatchesCatalogPrediction) {
  for (const auto& cs : catalog_cases()) {
    SCOPED_TRACE(cs.name);
    const DualityMap f = build_named_map(cs.name, cs.params);
    const PointSet sample = sample_chart(cs.params.n, 30, cs.ulo, cs.uhi);
    const EDExtraction ex = extract_ed_form(f, lift_metric(cs.target), sample);
    const EDExtraction pr = predicted_dual_fields(cs.name, cs.params, cs.target);
    EXPECT_LT(compare(ex, pr, sample, cs.params.n), 1e-7);
    EXPECT_LT(bargmann_residual(f, sample), 1e-10);
  }
}

TEST(DualityMap, TemporalConditionsHoldForTimeMaps) {
  for (const auto& cs : catalog_cases()) {
    if (cs.name == "schrodinger_group") continue;
    SCOPED_TRACE(cs.name);
    const DualityMap f = build_named_map(cs.name, cs.params);
    const PointSet sample = sample_chart(cs.params.n, 30, cs.ulo, cs.uhi);
    const EDExtraction ex = extract_ed_form(f, lift_metric(cs.target), sample);
    const TemporalResidual r = temporal_conditions_residual(f, ex, cs.target, sample);
    EXPECT_LT(r.omega, 1e-9);
    EXPECT_LT(r.max(), 1e-8);
    // a wrong potential violates them
    EDExtraction bad = ex;
    bad.V = ex.V + 0.1;
    EXPECT_GT(temporal_conditions_residual(f, bad, cs.target, sample).potential, 1e-3);
  }
}

TEST(DualityMap, ExtractedSystemReadsAtZeroV) {
  const auto cs = catalog_cases()[0];
  const DualityMap f = build_named_map(cs.name, cs.params);
  const EDExtraction pr = predicted_dual_fields(cs.name, cs.params, cs.target);
  const NaturalSystem s = pr.to_natural_system();
  for (const auto& y : sample_chart(2, 5, -1.0, 1.0)) {
    const std::vector<double> qu{y[0], y[1], y[2]};
    EXPECT_NEAR(s.V(qu), pr.V(y), 1e-14);
  }
}

TEST(DualityMap, QuadraticInVIsRejected) {
  const int N = 3;
  const ScalarField v = ScalarField::coordinate(N, 2);
  const DualityMap f("quadratic", {ScalarField::coordinate(N, 0), ScalarField::coordinate(N, 1), v + 0.3 * v * v});
  // mixing v into q̄ breaks g_iv = 0 instead
  const DualityMap mix("mix", {ScalarField::coordinate(N, 0) + 0.5 * v, ScalarField::coordinate(N, 1), v});
  const Metric g = lift_metric(builtin_system("harmonic", {{"omega", 1.0}, {"n", 1}}));
  const PointSet sample = sample_chart(1, 10, -1.0, 1.0);
  try {
    extract_ed_form(f, g, sample);
    FAIL() << "expected a constraint violation";
  } catch (const ConstraintViolation& e) {
    EXPECT_NE(std::string(e.what()).find("depends on v"), std::string::npos);
  }
  EXPECT_EQ(classify_duality(f, g, g, sample).verdict, DualityClass::kNotEquivalent);
  try {
    extract_ed_form(mix, g, sample);
    FAIL() << "expected a constraint violation";
  } catch (const ConstraintViolation& e) {
    EXPECT_NE(std::string(e.what()).find("g_q1v"), std::string::npos);
  }
}

TEST(DualityMap, Errors) {
  EXPECT_THROW(build_named_map("nonsense", MapParams{}), PreconditionError);
  MapParams p;
  p.phi = parse_phi("u^2");
  EXPECT_THROW(build_named_map("dark_energy", p), DomainError);  // φ′(0) = 0 and no declared sign
  p.phi = parse_phi("u");
  const NaturalSystem curved = custom_system(1, {{"1 + q1^2"}}, "0");
  EXPECT_THROW(predicted_dual_fields("dark_energy", p, curved), PreconditionError);
  EXPECT_THROW(predicted_dual_fields("dark_energy", p, custom_system(1, {}, "0", {"q1"})), PreconditionError);
  MapParams s;
  s.group = SchrodingerGroupElement::identity(1);
  EXPECT_THROW(predicted_dual_fields("schrodinger_group", s, builtin_system("harmonic", {{"omega", 1.0}, {"n", 1}})), PreconditionError);
  const DualityMap flat_scale("fold", {ScalarField::coordinate(3, 0), 0.0 * ScalarField::coordinate(3, 1), ScalarField::coordinate(3, 2)});
  EXPECT_THROW(flat_scale.jacobian(std::vector<double>{0.1, 0.2, 0.3}), SingularMetricError);
}

// ------------------------------------------------------------ Schrödinger group

TEST(SchrodingerGroup, GroupLaw) {
  double worst = 0.0, worst_inv = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_element(2), y = random_element(2);
    const auto xy = product(x, y);
    const auto xi = inverse(x);
    for (int k = 0; k < 10; ++k) {
      const std::vector<double> pt{uniform(-1, 1), uniform(-1, 1), uniform(-0.5, 0.5), uniform(-1, 1)};
      const auto a = xy.apply(pt), b = x.apply(y.apply(pt));
      const auto c = xi.apply(x.apply(pt));
      for (std::size_t i = 0; i < 4; ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
        worst_inv = std::max(worst_inv, std::abs(c[i] - pt[i]));
      }
    }
  }
  EXPECT_LT(worst, 1e-10);
  EXPECT_LT(worst_inv, 1e-10);
}

TEST(SchrodingerGroup, Validation) {
  auto el = SchrodingerGroupElement::identity(2);
  EXPECT_NO_THROW(el.validate());
  el.A(0, 1) = 0.1;
  EXPECT_THROW(el.validate(), PreconditionError);
  el = SchrodingerGroupElement::identity(2);
  el.d = 2.0;
  EXPECT_THROW(el.validate(), PreconditionError);
  el = SchrodingerGroupElement::identity(1);
  el.f = 1.0;
  EXPECT_THROW(projective_matrix_action(el, Vec::Zero(1), -1.0), DomainError);
}

TEST(SchrodingerGroup, BoostIsASymmetryOfTheFreeParticle) {
  auto boost = SchrodingerGroupElement::identity(1);
  boost.b(0) = 0.7;
  MapParams p;
  p.group = boost;
  const DualityMap f = build_named_map("schrodinger_group", p);
  const NaturalSystem free1 = builtin_system("free", {{"n", 1}});
  const Metric g = lift_metric(free1);
  const PointSet sample = sample_chart(1, 20, -1.0, 1.0);
  const auto ex = extract_ed_form(f, g, sample);
  for (const auto& y : sample) {
    EXPECT_NEAR(ex.Omega2(y), 1.0, 1e-14);
    EXPECT_NEAR(ex.V(y), 0.0, 1e-14);
    EXPECT_NEAR(ex.A[0](y), 0.0, 1e-14);
  }
  EXPECT_EQ(classify_duality(f, g, g, sample).verdict, DualityClass::kDynamicalSymmetry);
  // boosted straight worldline: q̄ = q + 0.7 u
  const auto [qb, ub] = projective_matrix_action(boost, Vec::Constant(1, 0.2), 1.5);
  EXPECT_NEAR(qb(0), 0.2 + 0.7 * 1.5, 1e-15);
  EXPECT_NEAR(ub, 1.5, 1e-15);
}

TEST(SchrodingerGroup, LinesMapToLines) {
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto el = random_element(2);
    const Vec q0 = Vec::Random(2), w = Vec::Random(2);
    std::vector<Vec> img;
    for (int k = 0; k <= 20; ++k) {
      const double u = -1.0 + 0.1 * k;
      const auto [qb, ub] = projective_matrix_action(el, q0 + w * u, u);
      Vec x(3);
      x << qb, ub;
      img.push_back(x);
    }
    const Vec dir = (img.back() - img.front()).normalized();
    for (const auto& x : img) {
      const Vec r = x - img.front();
      worst = std::max(worst, (r - r.dot(dir) * dir).norm());
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(SchrodingerGroup, MixedEquationsAlongPulledBackGeodesics) {
  MapParams p;
  p.n = 2;
  p.group = random_element(2);
  p.group.f = 0.3;
  p.group.g = (1.0 + p.group.e * p.group.f) / p.group.d;
  const DualityMap f = build_named_map("schrodinger_group", p);
  const NaturalSystem free2 = builtin_system("free", {{"n", 2}});
  const Metric flat = lift_metric(free2);
  const EDExtraction pr = predicted_dual_fields("schrodinger_group", p, free2);
  IntegratorConfig cfg;
  cfg.lambda_end = 1.0;
  // null and timelike geodesics of the flat lift
  for (double pq : {0.0, 0.4}) {
    const PhasePoint start{{0.2, -0.1, -0.5, 0.3}, {0.3, -0.2, pq, 1.0}};
    const auto tr = integrate_geodesic(flat, start, cfg);
    EXPECT_LT(mixed_equations_residual(f, pr.Omega2, flat, tr), 1e-5);
  }
  EXPECT_EQ(classify_duality(f, flat, flat, sample_chart(2, 10, -0.5, 0.5)).verdict, DualityClass::kDynamicalSymmetry);
}

// ------------------------------------------------------------ time maps

TEST(TimeMaps, MobiusIffNoCosmologicalTerm) {
  const Metric g = lift_metric(builtin_system("free", {{"n", 2}}));
  const PointSet sample = sample_chart(2, 10, 0.2, 1.0);
  for (const auto& [text, expect_mobius] :
       std::vector<std::pair<std::string, bool>>{{"(2*u + 1)/(u + 3)", true}, {"u + 4", true}, {"-1/u", true}, {"u^3 + u", false}, {"exp(u)", false}, {"tan(u)", false}}) {
    SCOPED_TRACE(text);
    MapParams p;
    p.n = 2;
    p.phi = parse_phi(text);
    p.phi_sign = 1;
    const ScalarField term = cosmological_term(p);
    double worst = 0.0;
    for (const auto& y : sample) worst = std::max(worst, std::abs(term(y)));
    const auto m = is_mobius_time_map(g, p.phi, 2, sample, 1e-9);
    EXPECT_EQ(m.mobius, expect_mobius);
    EXPECT_EQ(worst < 1e-9, expect_mobius);
  }
}

TEST(TimeMaps, NegativeOrientationFlipsNu) {
  MapParams p;
  p.n = 1;
  p.phi = parse_phi("-u");
  const DualityMap f = build_named_map("dark_energy", p);
  EXPECT_EQ(f.nu(), -1.0);
  const NaturalSystem osc = builtin_system("harmonic", {{"omega", 1.0}, {"n", 1}});
  const PointSet sample = sample_chart(1, 10, -1.0, 1.0);
  const auto ex = extract_ed_form(f, lift_metric(osc), sample);
  const auto pr = predicted_dual_fields("dark_energy", p, osc);
  EXPECT_LT(compare(ex, pr, sample, 1), 1e-10);
  for (const auto& y : sample) EXPECT_NEAR(ex.V(y), 0.5 * y[0] * y[0], 1e-12);  // V̄ evaluated at ū = −u
}

// ------------------------------------------------------------ Dirac map and Kepler

namespace {

constexpr double kA = 1.5, kB = 3.0, kC = 0.2, kD = 0.0;

MapParams dirac_params() {
  MapParams p;
  p.n = 2;
  p.a = kA;
  p.b = kB;
  p.c = kC;
  p.d = kD;
  return p;
}

}  // namespace

TEST(Dirac, TrajectoriesTransportToTheDual) {
  const DualityMap f = build_named_map("dirac_gravity", dirac_params());
  const LiftedSystem src = eisenhart_duval_lift(builtin_system("kepler", {{"G0", 1.0}, {"M", 1.0}}));
  const LiftedSystem tgt = eisenhart_duval_lift(dirac_time_dependent_kepler(2, 1.0, 1.0, kA, kC));
  const std::vector<double> q0{1.0, 0.0}, p0{0.1, 1.1};
  const double duration = 2.5;
  const auto ts = integrate_null_geodesic(src.metric, lift_initial_data(src, q0, p0), lift_integrator_config(src, lambda_for_duration(src, duration)));
  const PhasePoint start = map_phase_point(f, ts.points.front(), MapDirection::kForward);
  EXPECT_NEAR(hamiltonian_value(tgt.metric, start), 0.0, 1e-12);
  const double u0 = ts.points.front().y[2], u1 = ts.points.back().y[2];
  const auto ubar = [](double u) { return -kA * kA / (u + kB) + kC; };
  IntegratorConfig cfg = lift_integrator_config(tgt, ubar(u1) - ubar(u0));
  const auto tt = integrate_null_geodesic(tgt.metric, start, cfg);
  EXPECT_NEAR(tt.points.back().y[2], ubar(u1), 1e-9);
  // image of the source orbit in the target chart
  Polyline image;
  const double l0 = ts.lambda.front(), l1 = ts.lambda.back();
  for (int k = 0; k <= 2000; ++k) {
    const auto yb = f.apply(ts.state_at(l0 + (l1 - l0) * k / 2000.0).y);
    image.push_back({yb[0], yb[1], yb[2]});
  }
  EXPECT_LT(hausdorff_distance(image, dense_curve_of(tt, {0, 1, 2})), 1e-5);
  // pointwise transport keeps the null cone
  const auto mapped = map_phase_trajectory(f, ts, MapDirection::kForward, &tgt.metric);
  EXPECT_LT(mapped.diagnostics.max_abs_h, 1e-8);
}

TEST(Dirac, MappedKeplerSolvesTimeDependentCoupling) {
  const LiftedSystem src = eisenhart_duval_lift(builtin_system("kepler", {{"G0", 1.0}, {"M", 1.0}}));
  const auto ts = integrate_null_geodesic(src.metric, lift_initial_data(src, std::vector<double>{1.0, 0.0}, std::vector<double>{0.1, 1.1}),
                                          lift_integrator_config(src, lambda_for_duration(src, 2.5)));
  // base time t = −u/e on both sides
  const auto qbar = [&](double tb) {
    const double ub = -tb;
    const double u = -kA * kA / (ub - kC) - kB;
    const auto s = base_state_at(ts, src, -u);
    const double Om = kA / (u + kB);
    return Vec(Om * as_vec(s.q));
  };
  const auto G = [](double ub) { return kA / std::abs(ub - kC); };
  const double tb0 = kA * kA / kB - kC, tb1 = kA * kA / (kB - 2.5) - kC;
  const double delta = 1e-2;
  double worst = 0.0;
  for (int k = 1; k < 40; ++k) {
    const double tb = tb0 + (tb1 - tb0) * k / 40.0;
    if (tb - 2 * delta < tb0 || tb + 2 * delta > tb1) continue;
    const Vec acc = (-qbar(tb + 2 * delta) + 16.0 * qbar(tb + delta) - 30.0 * qbar(tb) + 16.0 * qbar(tb - delta) - qbar(tb - 2 * delta)) /
                    (12.0 * delta * delta);
    const Vec q = qbar(tb);
    const Vec force = -G(-tb) * q / std::pow(q.norm(), 3);
    worst = std::max(worst, (acc - force).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Dirac, ClassifiedAsProjectiveDuality) {
  const DualityMap f = build_named_map("dirac_gravity", dirac_params());
  const Metric src = lift_metric(builtin_system("kepler", {{"G0", 1.0}, {"M", 1.0}}));
  const Metric tgt = lift_metric(dirac_time_dependent_kepler(2, 1.0, 1.0, kA, kC));
  const auto c = classify_duality(f, src, tgt, sample_chart(2, 20, -1.0, 1.0, 2.0));
  EXPECT_EQ(c.verdict, DualityClass::kProjectiveDuality);
  EXPECT_LT(c.proportionality_residual, 1e-10);
  EXPECT_GT(c.omega2_min, 0.0);
  EXPECT_STREQ(to_string(c.verdict), "projective-duality");
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nullift/cli.hpp"

using namespace nullift;
using namespace nullift::cli;

namespace {

json minimal() { return json::parse(R"({"system": {"builtin": "free", "params": {"n": 1}}, "lift": "eisenhart-duval"})"); }

json oscillator() {
  return json::parse(R"({
    "name": "osc",
    "system": {"builtin": "harmonic", "params": {"omega": 1.0, "n": 1}},
    "initial": {"q": [1.0], "p": [0.0]},
    "integrate": {"duration": 10.0},
    "checks": ["null-drift", "conserved:p_v"]
  })");
}

std::vector<std::vector<double>> read_csv(const std::string& path, std::string* header = nullptr) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

std::string tmpdir(const std::string& leaf) {
  const auto p = std::filesystem::temp_directory_path() / "nullift_test_cli" / leaf;
  std::filesystem::create_directories(p);
  return p.string();
}

const CheckRecord& record(const Report& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return c;
  throw std::runtime_error("no record " + name);
}

}  // namespace

TEST(Scenario, MinimalConfigIsValid) {
  const Scenario sc = scenario_from_json(minimal());
  EXPECT_EQ(sc.system.n, 1);
  EXPECT_EQ(sc.lift.kind, LiftKind::kEisenhartDuval);
  EXPECT_EQ(sc.integrate.config.rel_tol, 1e-11);
  ASSERT_EQ(sc.checks.size(), 1u);
  EXPECT_EQ(sc.checks[0].name, "null-drift");
  EXPECT_FALSE(sc.transform.has_value());
}

TEST(Scenario, ParseErrorCarriesLocation) {
  json j = minimal();
  j["system"] = {{"n", 1}, {"V", "q1^/2"}};
  try {
    scenario_from_json(j);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("'^/'"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("system.V"), std::string::npos);
    EXPECT_EQ(e.position(), 3u);
  }
}

TEST(Scenario, SemanticErrors) {
  json j = oscillator();
  j["transform"] = {{"catalog", "dark_energy"}, {"params", json::object()}};
  try {
    scenario_from_json(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("missing param phi"), std::string::npos) << e.what();
  }
  json k = oscillator();
  k["checks"] = {"null-drift", "energy-ish"};
  EXPECT_THROW(scenario_from_json(k), ConfigError);
  json m = minimal();
  m["system"] = {{"n", 1}, {"V", "q2"}};  // variable beyond n
  EXPECT_THROW(scenario_from_json(m), ParseError);
  json d = minimal();
  d["checks"] = {"duality-match"};
  EXPECT_THROW(scenario_from_json(d), ConfigError);
  json h = minimal();
  h["system"] = {{"builtin", "harmonic"}};
  EXPECT_THROW(scenario_from_json(h), ConfigError);
  json l = minimal();
  l["lift"] = "kaluza-klein";
  EXPECT_THROW(scenario_from_json(l), ConfigError);
}

TEST(Scenario, OtherLiftsAndTransforms) {
  json j = oscillator();
  j["lift"] = {{"kind", "signed-clock"}, {"sign", 1}, {"region", {{"lower", {-2.0}}, {"upper", {2.0}}}}};
  j["system"] = {{"n", 1}, {"V", "1 + q1^2/2"}};
  EXPECT_EQ(scenario_from_json(j).lift.kind, LiftKind::kSignedClock);
  j["lift"] = {{"kind", "ccm"}, {"F", "1 + q1^2"}, {"g", 0.5}};
  EXPECT_EQ(scenario_from_json(j).lift.kind, LiftKind::kCcm);
  j["lift"] = {{"kind", "multi-potential"}, {"potentials", {"q1^2/2", "0.1*q1"}}};
  EXPECT_EQ(scenario_from_json(j).lift.dim(), 5);
  json t = oscillator();
  t["transform"] = {{"forward", {"q1", "u", "v + 1"}}, {"nu", 1}};
  EXPECT_EQ(scenario_from_json(t).transform->name, "custom");
  t["transform"] = {{"catalog", "schrodinger_group"}, {"params", {{"group", {{"d", 1.0}, {"e", 0.5}, {"g", 1.5}}}}}};
  EXPECT_THROW(scenario_from_json(t), ConfigError);  // dg − ef = 1.25
}

TEST(Run, OscillatorChecksPass) {
  const Report r = run_scenario(scenario_from_json(oscillator()), false);
  ASSERT_EQ(r.checks.size(), 2u);
  for (const auto& c : r.checks) {
    EXPECT_TRUE(c.pass) << c.name << " " << c.detail;
    EXPECT_LT(c.value, 1e-8);
    EXPECT_EQ(c.tolerance, 1e-8);
  }
  EXPECT_TRUE(r.passed());
  const json j = r.to_json();
  EXPECT_EQ(j["checks"][0]["status"], "pass");
  EXPECT_TRUE(j["provenance"]["digest"].get<std::string>().rfind("fnv1a64:", 0) == 0);
}

TEST(Run, DiracDualityMatch) {
  json j = oscillator();
  j["name"] = "dirac";
  j["system"] = {{"builtin", "kepler"}, {"params", {{"G0", 1.0}, {"M", 1.0}}}};
  j["initial"] = {{"q", {1.0, 0.0}}, {"p", {0.1, 1.1}}};
  j["integrate"] = {{"duration", 2.5}};
  j["transform"] = {{"catalog", "dirac_gravity"},
                    {"params", {{"a", 1.5}, {"b", 3.0}, {"c", 0.2}}},
                    {"target", {{"n", 2}, {"V", "-1.5/abs(u - 0.2)/sqrt(q1^2 + q2^2)"}}}};
  j["checks"] = {"duality-match"};
  const Report r = run_scenario(scenario_from_json(j), false);
  const CheckRecord& c = record(r, "duality-match");
  EXPECT_TRUE(c.pass) << c.detail;
  EXPECT_LE(c.value, 1e-5);
  EXPECT_NE(c.detail.find("projective-duality"), std::string::npos);
  // a wrong target is detected
  j["transform"]["target"]["V"] = "-1/sqrt(q1^2 + q2^2)";
  EXPECT_FALSE(run_scenario(scenario_from_json(j), false).passed());
}

TEST(Run, NonNullInitialDataFails) {
  json j = oscillator();
  j["initial"] = {{"y", {1.0, 0.0, 0.0}}, {"p", {0.5, -0.1, 1.0}}};
  const Report r = run_scenario(scenario_from_json(j), false);
  EXPECT_FALSE(r.passed());
  EXPECT_FALSE(record(r, "null-drift").pass);
  EXPECT_FALSE(record(r, "integrate").pass);
  EXPECT_NE(record(r, "integrate").detail.find("not null"), std::string::npos);
}

TEST(Run, ErrorsBecomeFailuresAndRunContinues) {
  json j = oscillator();
  j["checks"] = {"conserved:angular_momentum", "null-drift"};  // n = 1
  const Report r = run_scenario(scenario_from_json(j), false);
  EXPECT_FALSE(record(r, "conserved:angular_momentum").pass);
  EXPECT_TRUE(record(r, "null-drift").pass);
}

TEST(Run, Deterministic) {
  json j = oscillator();
  j["checks"] = {"null-drift", "conserved:p_u", "yamabe-covariance"};
  const Report a = run_scenario(scenario_from_json(j), false);
  const Report b = run_scenario(scenario_from_json(j), false);
  ASSERT_EQ(a.checks.size(), b.checks.size());
  for (std::size_t k = 0; k < a.checks.size(); ++k) {
    EXPECT_EQ(a.checks[k].value, b.checks[k].value) << a.checks[k].name;
    EXPECT_EQ(a.checks[k].pass, b.checks[k].pass);
  }
  EXPECT_EQ(a.digest, b.digest);
  EXPECT_TRUE(record(a, "yamabe-calibration").pass);
}

TEST(Run, WritesFiles) {
  json j = oscillator();
  j["output"] = {{"dir", tmpdir("files")}};
  const Report r = run_scenario(scenario_from_json(j));
  for (const char* k : {"trajectory", "plotdata", "report"}) EXPECT_TRUE(std::filesystem::exists(r.outputs.at(k))) << k;
  std::ifstream in(r.outputs.at("report"));
  const json rep = json::parse(in);
  EXPECT_EQ(rep["scenario"], "osc");
  EXPECT_TRUE(rep["passed"].get<bool>());
}

TEST(Plotdata, OscillatorEnergyConstant) {
  const Scenario sc = scenario_from_json(oscillator());
  const auto pt = lift_initial_data(sc.lift, sc.initial.q, sc.initial.p);
  const auto tr = integrate_null_geodesic(sc.lift.metric, pt, lift_integrator_config(sc.lift, lambda_for_duration(sc.lift, 10.0)));
  const std::string path = tmpdir("osc") + "/plot.csv";
  export_plotdata(tr, sc.lift, path);
  std::string header;
  const auto rows = read_csv(path, &header);
  EXPECT_EQ(header, "t,q1,p1,E");
  ASSERT_GT(rows.size(), 10u);
  double worst = 0.0, qerr = 0.0;
  for (const auto& r : rows) {
    worst = std::max(worst, std::abs(r[3] - 0.5));
    qerr = std::max(qerr, std::abs(r[1] - std::cos(r[0])));
  }
  EXPECT_LE(worst, 1e-6);
  EXPECT_LE(qerr, 1e-6);
  EXPECT_NEAR(rows.back()[0], 10.0, 1e-9);
}

TEST(Plotdata, FreeParticleAffine) {
  json j = minimal();
  j["system"] = {{"builtin", "free"}, {"params", {{"n", 2}}}};
  j["initial"] = {{"q", {0.3, -1.0}}, {"p", {0.7, 0.2}}, {"t0", 1.5}};
  const Scenario sc = scenario_from_json(j);
  const auto tr = integrate_null_geodesic(sc.lift.metric, lift_initial_data(sc.lift, sc.initial.q, sc.initial.p, 1.5),
                                          lift_integrator_config(sc.lift, lambda_for_duration(sc.lift, 4.0)));
  const std::string path = tmpdir("free") + "/plot.csv";
  export_plotdata(tr, sc.lift, path, 1.5);
  double worst = 0.0;
  for (const auto& r : read_csv(path)) {
    worst = std::max(worst, std::abs(r[1] - (0.3 + 0.7 * (r[0] - 1.5))));
    worst = std::max(worst, std::abs(r[2] - (-1.0 + 0.2 * (r[0] - 1.5))));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Plotdata, KeplerPointsOnConic) {
  json j = minimal();
  j["system"] = {{"builtin", "kepler"}, {"params", {{"G0", 1.0}, {"M", 1.0}}}};
  j["initial"] = {{"q", {1.0, 0.0}}, {"p", {0.0, 1.2}}};
  const Scenario sc = scenario_from_json(j);
  const auto tr = integrate_null_geodesic(sc.lift.metric, lift_initial_data(sc.lift, sc.initial.q, sc.initial.p),
                                          lift_integrator_config(sc.lift, lambda_for_duration(sc.lift, 30.0)));
  const std::string path = tmpdir("kepler") + "/plot.csv";
  export_plotdata(tr, sc.lift, path);
  // conic r + (A·q)/k = L²/k with A the Runge-Lenz vector, k = G0 M = 1
  const double L = 1.2, Ax = 1.2 * L - 1.0, Ay = 0.0;
  double worst = 0.0;
  for (const auto& r : read_csv(path)) {
    const double rad = std::hypot(r[1], r[2]);
    worst = std::max(worst, std::abs(rad + Ax * r[1] + Ay * r[2] - L * L));
    worst = std::max(worst, std::abs(r[5] - (0.5 * 1.44 - 1.0)));
  }
  EXPECT_LE(worst, 1e-5);
}

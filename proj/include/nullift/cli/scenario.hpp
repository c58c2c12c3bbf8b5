#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nullift/dualities.hpp"
#include "nullift/errors.hpp"
#include "nullift/fields.hpp"
#include "nullift/invariants.hpp"
#include "nullift/lifts.hpp"

namespace nullift::cli {

using json = nlohmann::json;

/// Semantic problem in a scenario file (unknown key value, missing param).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct CheckSpec {
  std::string name;
  double tolerance = 0.0;
};

struct TransformSpec {
  std::string name;  // catalog name or "custom"
  DualityMap map;
  std::optional<MapParams> params;  // catalog maps only
  std::optional<NaturalSystem> target;
};

struct InitialSpec {
  std::vector<double> q, p;
  double t0 = 0.0;
  std::optional<PhasePoint> raw;  // lifted data taken as given
};

struct IntegrateSpec {
  double duration = 10.0;
  IntegratorConfig config;  // lambda_end and projection index are filled at run time
};

struct OutputSpec {
  std::string dir;
  std::string trajectory = "trajectory.csv";
  std::string plotdata = "plotdata.csv";
  std::string report = "report";  // .json and .txt are appended
};

struct Scenario {
  std::string name;
  std::string path;
  std::string digest;
  json config;
  NaturalSystem system;
  LiftedSystem lift;
  InitialSpec initial;
  IntegrateSpec integrate;
  std::optional<TransformSpec> transform;
  std::vector<CheckSpec> checks;
  OutputSpec output;
};

inline const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names{"null-drift",     "conserved:p_v", "conserved:p_u",  "conserved:angular_momentum",
                                              "killing-residual", "duality-match", "mobius",         "yamabe-covariance"};
  return names;
}

inline const std::vector<std::string>& lift_kind_names() {
  static const std::vector<std::string> names{"eisenhart-duval", "signed-clock", "multi-potential", "ccm"};
  return names;
}

inline const std::vector<std::string>& builtin_system_names() {
  static const std::vector<std::string> names{"free", "harmonic", "kepler"};
  return names;
}

inline double default_tolerance(const std::string& check) {
  if (check == "conserved:angular_momentum") return 1e-7;
  if (check == "duality-match") return 1e-5;
  if (check == "mobius") return 1e-9;
  if (check == "yamabe-covariance") return 1e-6;
  return 1e-8;
}

inline std::string fnv1a_digest(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

namespace detail {

inline const json& member(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError(where + ": expected a number");
  return j.get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  return j.is_object() && j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
}

inline std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

inline std::string text(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) {
    std::ostringstream s;
    s.precision(17);
    s << j.get<double>();
    return s.str();
  }
  throw ConfigError(where + ": expected an expression string");
}

inline ScalarField expression(const json& j, const std::vector<std::string>& vars, const std::string& where) {
  const std::string src = text(j, where);
  try {
    return parse_scalar_field(src, std::span<const std::string>(vars));
  } catch (const ParseError& e) {
    throw ParseError(where + ": " + e.what(), e.position(), e.token());
  }
}

inline int integer(const json& j, const std::string& where) {
  const double x = number(j, where);
  if (x != static_cast<double>(static_cast<int>(x))) throw ConfigError(where + ": expected an integer");
  return static_cast<int>(x);
}

inline Mat matrix(const json& j, int n, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) throw ConfigError(where + ": expected " + std::to_string(n) + " rows");
  Mat M(n, n);
  for (int i = 0; i < n; ++i) {
    const auto row = numbers(j[static_cast<std::size_t>(i)], where + "[" + std::to_string(i) + "]");
    if (static_cast<int>(row.size()) != n) throw ConfigError(where + ": rows must have " + std::to_string(n) + " entries");
    for (int k = 0; k < n; ++k) M(i, k) = row[static_cast<std::size_t>(k)];
  }
  return M;
}

inline NaturalSystem parse_system(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  if (j.contains("builtin")) {
    std::map<std::string, double> params;
    if (j.contains("params")) {
      const json& p = j.at("params");
      if (!p.is_object()) throw ConfigError(where + ".params: expected an object");
      for (auto it = p.begin(); it != p.end(); ++it) params[it.key()] = number(it.value(), where + ".params." + it.key());
    }
    const std::string name = text(j.at("builtin"), where + ".builtin");
    try {
      return builtin_system(name, params);
    } catch (const PreconditionError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  const int n = integer(member(j, "n", where), where + ".n");
  if (n < 1) throw ConfigError(where + ".n: must be >= 1");
  const auto vars = coordinate_names(n, {"u"});
  NaturalSystem s;
  s.n = n;
  s.name = j.contains("label") ? text(j.at("label"), where + ".label") : "custom";
  s.e = number_or(j, "e", 1.0, where);
  s.h = MatrixField::identity(n, n + 1);
  if (j.contains("h")) {
    const json& rows = j.at("h");
    if (!rows.is_array() || static_cast<int>(rows.size()) != n) throw ConfigError(where + ".h: expected " + std::to_string(n) + " rows");
    s.h = MatrixField(n, n + 1);
    for (int i = 0; i < n; ++i) {
      const json& row = rows[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<int>(row.size()) != n) throw ConfigError(where + ".h: rows must have " + std::to_string(n) + " entries");
      for (int k = i; k < n; ++k)
        s.h.set(i, k, expression(row[static_cast<std::size_t>(k)], vars, where + ".h[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
    }
  }
  s.V = j.contains("V") ? expression(j.at("V"), vars, where + ".V") : ScalarField::constant(n + 1, 0.0);
  if (j.contains("A")) {
    const json& A = j.at("A");
    if (!A.is_array() || static_cast<int>(A.size()) != n) throw ConfigError(where + ".A: expected " + std::to_string(n) + " components");
    for (int i = 0; i < n; ++i) s.A.push_back(expression(A[static_cast<std::size_t>(i)], vars, where + ".A[" + std::to_string(i) + "]"));
  }
  try {
    s.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

inline int sign_of(const json& j, const std::string& where) {
  const int s = integer(j, where);
  if (s != 1 && s != -1) throw ConfigError(where + ": must be +1 or -1");
  return s;
}

inline LiftedSystem parse_lift(const json& j, const NaturalSystem& s, const std::string& where) {
  const std::string kind = j.is_string() ? j.get<std::string>() : text(member(j, "kind", where), where + ".kind");
  const int n = s.n;
  try {
    if (kind == "eisenhart-duval") return eisenhart_duval_lift(s);
    if (kind == "signed-clock") {
      const json& r = member(j, "region", where);
      Region region;
      region.lower = numbers(member(r, "lower", where + ".region"), where + ".region.lower");
      region.upper = numbers(member(r, "upper", where + ".region"), where + ".region.upper");
      if (r.contains("samples")) region.samples_per_axis = integer(r.at("samples"), where + ".region.samples");
      return signed_clock_lift(s, sign_of(member(j, "sign", where), where + ".sign"), region);
    }
    if (kind == "multi-potential") {
      const auto qvars = coordinate_names(n, {});
      const json& pots = member(j, "potentials", where);
      if (!pots.is_array()) throw ConfigError(where + ".potentials: expected an array");
      std::vector<ScalarField> V;
      for (std::size_t k = 0; k < pots.size(); ++k) V.push_back(expression(pots[k], qvars, where + ".potentials[" + std::to_string(k) + "]"));
      std::vector<double> couplings;
      if (j.contains("couplings")) couplings = numbers(j.at("couplings"), where + ".couplings");
      if (s.time_dependent()) throw ConfigError(where + ": multi-potential lift needs a time-independent kinetic metric");
      MatrixField h(n, n);
      for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) h.set(a, b, ::nullift::detail::drop_time(s.h(a, b), n));
      return multi_potential_lift(h, V, couplings);
    }
    if (kind == "ccm") {
      const ScalarField F = expression(member(j, "F", where), coordinate_names(n, {"u"}), where + ".F");
      return ccm_lift(s, F, number_or(j, "g", 1.0, where), j.contains("sign") ? sign_of(j.at("sign"), where + ".sign") : 1);
    }
  } catch (const PreconditionError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": unknown lift kind '" + kind + "'");
}

inline SchrodingerGroupElement parse_group(const json& j, int n, const std::string& where) {
  SchrodingerGroupElement el = SchrodingerGroupElement::identity(n);
  if (j.contains("A")) el.A = matrix(j.at("A"), n, where + ".A");
  const auto vec = [&](const char* key, Vec& out) {
    if (!j.contains(key)) return;
    const auto v = numbers(j.at(key), where + "." + key);
    if (static_cast<int>(v.size()) != n) throw ConfigError(where + "." + key + ": expected " + std::to_string(n) + " entries");
    out = Eigen::Map<const Vec>(v.data(), n);
  };
  vec("b", el.b);
  vec("c", el.c);
  el.d = number_or(j, "d", el.d, where);
  el.e = number_or(j, "e", el.e, where);
  el.f = number_or(j, "f", el.f, where);
  el.g = number_or(j, "g", el.g, where);
  el.h = number_or(j, "h", el.h, where);
  try {
    el.validate();
  } catch (const PreconditionError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return el;
}

inline MapParams parse_map_params(const std::string& name, const json& j, int n, const std::string& where) {
  MapParams p;
  p.n = n;
  p.h = Mat::Identity(n, n);
  const bool time_map = name == "dark_energy" || name == "em_field";
  if (time_map) {
    if (!j.contains("phi")) throw ConfigError(where + ": missing param phi");
    p.phi = expression(j.at("phi"), {"u"}, where + ".phi");
    if (j.contains("phi_sign")) p.phi_sign = sign_of(j.at("phi_sign"), where + ".phi_sign");
    if (j.contains("h")) p.h = matrix(j.at("h"), n, where + ".h");
  } else if (name == "dirac_gravity") {
    if (!j.contains("a")) throw ConfigError(where + ": missing param a");
    p.a = number(j.at("a"), where + ".a");
    p.b = number_or(j, "b", 0.0, where);
    p.c = number_or(j, "c", 0.0, where);
    p.d = number_or(j, "d", 0.0, where);
  } else if (name == "schrodinger_group") {
    p.group = parse_group(j.contains("group") ? j.at("group") : json::object(), n, where + ".group");
  }
  return p;
}

inline TransformSpec parse_transform(const json& j, int n, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::optional<NaturalSystem> target;
  if (j.contains("target")) {
    target = parse_system(j.at("target"), where + ".target");
    if (target->n != n) throw ConfigError(where + ".target: dimension does not match the system");
  }
  if (j.contains("catalog")) {
    const std::string name = text(j.at("catalog"), where + ".catalog");
    bool known = false;
    for (const auto& c : catalog_names()) known = known || c == name;
    if (!known) throw ConfigError(where + ": unknown catalog map '" + name + "'");
    const MapParams p = parse_map_params(name, j.contains("params") ? j.at("params") : json::object(), n, where + ".params");
    try {
      return TransformSpec{name, build_named_map(name, p), p, target};
    } catch (const Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  const auto vars = coordinate_names(n);
  const auto fields = [&](const char* key) {
    const json& arr = member(j, key, where);
    if (!arr.is_array() || static_cast<int>(arr.size()) != n + 2)
      throw ConfigError(where + "." + key + ": expected " + std::to_string(n + 2) + " expressions");
    std::vector<ScalarField> out;
    for (int k = 0; k < n + 2; ++k) out.push_back(expression(arr[static_cast<std::size_t>(k)], vars, where + "." + key + "[" + std::to_string(k) + "]"));
    return out;
  };
  if (!j.contains("forward")) throw ConfigError(where + ": needs 'catalog' or 'forward'");
  std::optional<std::vector<ScalarField>> inverse;
  if (j.contains("inverse")) inverse = fields("inverse");
  const double nu = number_or(j, "nu", 1.0, where);
  return TransformSpec{"custom", DualityMap("custom", fields("forward"), inverse, nu, false), std::nullopt, target};
}

inline std::vector<CheckSpec> parse_checks(const json& j, const json& tolerances, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of check names");
  std::vector<CheckSpec> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string name = text(j[k], where + "[" + std::to_string(k) + "]");
    bool known = false;
    for (const auto& c : check_names()) known = known || c == name;
    if (!known) throw ConfigError(where + ": unknown check '" + name + "'");
    double tol = default_tolerance(name);
    if (tolerances.is_object() && tolerances.contains(name)) tol = number(tolerances.at(name), "tolerances." + name);
    out.push_back({name, tol});
  }
  return out;
}

}  // namespace detail

/// Build and validate a scenario from its JSON document. Every expression is
/// parsed here, so syntax errors surface before any integration.
inline Scenario scenario_from_json(const json& doc, std::string path = {}) {
  using namespace detail;
  if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
  Scenario sc;
  sc.path = std::move(path);
  sc.config = doc;
  sc.digest = fnv1a_digest(doc.dump());
  sc.name = doc.contains("name") ? text(doc.at("name"), "name") : "scenario";
  sc.system = parse_system(member(doc, "system", "scenario"), "system");
  const int n = sc.system.n;
  sc.lift = parse_lift(doc.contains("lift") ? doc.at("lift") : json("eisenhart-duval"), sc.system, "lift");

  sc.initial.q.assign(static_cast<std::size_t>(n), 0.0);
  sc.initial.q[0] = 1.0;
  sc.initial.p.assign(static_cast<std::size_t>(n), 0.0);
  if (doc.contains("initial")) {
    const json& ini = doc.at("initial");
    if (ini.contains("y")) {
      PhasePoint pt{numbers(ini.at("y"), "initial.y"), numbers(member(ini, "p", "initial"), "initial.p")};
      if (static_cast<int>(pt.y.size()) != sc.lift.dim() || pt.p.size() != pt.y.size())
        throw ConfigError("initial: lifted data needs " + std::to_string(sc.lift.dim()) + " coordinates and momenta");
      sc.initial.raw = pt;
    } else {
      if (ini.contains("q")) sc.initial.q = numbers(ini.at("q"), "initial.q");
      if (ini.contains("p")) sc.initial.p = numbers(ini.at("p"), "initial.p");
      if (static_cast<int>(sc.initial.q.size()) != n || static_cast<int>(sc.initial.p.size()) != n)
        throw ConfigError("initial: q and p need " + std::to_string(n) + " components");
      sc.initial.t0 = number_or(ini, "t0", 0.0, "initial");
    }
  }

  IntegratorConfig& cfg = sc.integrate.config;
  cfg.null_projection = !sc.initial.raw.has_value();
  if (doc.contains("integrate")) {
    const json& in = doc.at("integrate");
    sc.integrate.duration = number_or(in, "duration", sc.integrate.duration, "integrate");
    cfg.rel_tol = number_or(in, "rel_tol", cfg.rel_tol, "integrate");
    cfg.abs_tol = number_or(in, "abs_tol", cfg.abs_tol, "integrate");
    cfg.max_step = number_or(in, "max_step", cfg.max_step, "integrate");
    cfg.null_tol = number_or(in, "null_tol", cfg.null_tol, "integrate");
    if (in.contains("null_projection")) {
      if (!in.at("null_projection").is_boolean()) throw ConfigError("integrate.null_projection: expected true or false");
      cfg.null_projection = in.at("null_projection").get<bool>();
    }
    if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0)) throw ConfigError("integrate: tolerances must be positive");
  }

  if (doc.contains("transform")) sc.transform = parse_transform(doc.at("transform"), n, "transform");
  const json tolerances = doc.contains("tolerances") ? doc.at("tolerances") : json::object();
  sc.checks = parse_checks(doc.contains("checks") ? doc.at("checks") : json::array({"null-drift"}), tolerances, "checks");
  for (const auto& c : sc.checks) {
    if ((c.name == "duality-match" || c.name == "mobius") && !sc.transform) throw ConfigError("checks: '" + c.name + "' needs a transform");
    if (c.name == "duality-match" && !sc.transform->target) throw ConfigError("checks: 'duality-match' needs transform.target");
    if (c.name == "mobius" && !(sc.transform->params && (sc.transform->name == "dark_energy" || sc.transform->name == "em_field")))
      throw ConfigError("checks: 'mobius' needs a dark_energy or em_field transform");
  }

  sc.output.dir = "out/" + sc.name;
  if (doc.contains("output")) {
    const json& o = doc.at("output");
    if (o.contains("dir")) sc.output.dir = text(o.at("dir"), "output.dir");
    if (o.contains("trajectory")) sc.output.trajectory = text(o.at("trajectory"), "output.trajectory");
    if (o.contains("plotdata")) sc.output.plotdata = text(o.at("plotdata"), "output.plotdata");
    if (o.contains("report")) sc.output.report = text(o.at("report"), "output.report");
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
  return scenario_from_json(doc, path);
}

}  // namespace nullift::cli

#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace nullift::cli {

inline constexpr const char* kVersion = "0.1.0";

struct CheckRecord {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct Report {
  std::string scenario;
  std::string config_path;
  std::string digest;
  std::string version = kVersion;
  std::string timestamp;
  std::vector<CheckRecord> checks;
  std::map<std::string, std::string> outputs;
  std::vector<std::string> notes;

  void add(CheckRecord r) { checks.push_back(std::move(r)); }

  void fail(const std::string& name, double tolerance, const std::string& why) {
    checks.push_back({name, false, std::numeric_limits<double>::quiet_NaN(), tolerance, why});
  }

  bool passed() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return !checks.empty();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["provenance"] = {{"config", config_path}, {"digest", digest}, {"version", version}, {"timestamp", timestamp}};
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks) {
      nlohmann::json r{{"name", c.name}, {"status", c.pass ? "pass" : "fail"}, {"tolerance", c.tolerance}, {"detail", c.detail}};
      r["value"] = std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
      j["checks"].push_back(std::move(r));
    }
    j["outputs"] = outputs;
    j["notes"] = notes;
    j["passed"] = passed();
    return j;
  }

  std::string to_text() const {
    std::ostringstream s;
    s << "scenario " << scenario << "  (" << digest << ", nullift " << version << ")\n";
    for (const auto& c : checks) {
      s << (c.pass ? "PASS " : "FAIL ") << std::left << std::setw(28) << c.name << std::right;
      if (std::isfinite(c.value))
        s << " value=" << std::scientific << std::setprecision(3) << c.value;
      else
        s << " value=n/a      ";
      s << " tol=" << std::scientific << std::setprecision(1) << c.tolerance << std::defaultfloat;
      if (!c.detail.empty()) s << "  " << c.detail;
      s << '\n';
    }
    for (const auto& n : notes) s << "note: " << n << '\n';
    for (const auto& [k, v] : outputs) s << "wrote " << k << ": " << v << '\n';
    s << (passed() ? "all checks passed" : "some checks FAILED") << '\n';
    return s.str();
  }
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace nullift::cli

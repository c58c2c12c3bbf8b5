#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nullift/cli.hpp"

namespace {

using namespace nullift;
using namespace nullift::cli;

int cmd_run(const std::string& path, bool json_out) {
  const Scenario sc = load_scenario(path);
  const Report rep = run_scenario(sc);
  if (json_out)
    std::cout << rep.to_json().dump(2) << '\n';
  else
    std::cout << rep.to_text();
  return rep.passed() ? 0 : 1;
}

int cmd_check(const std::string& path) {
  const Scenario sc = load_scenario(path);
  std::cout << "ok: " << sc.name << " (n=" << sc.system.n << ", lift=" << to_string(sc.lift.kind);
  if (sc.transform) std::cout << ", transform=" << sc.transform->name;
  std::cout << ", checks=";
  for (std::size_t k = 0; k < sc.checks.size(); ++k) std::cout << (k ? "," : "") << sc.checks[k].name;
  std::cout << ", " << sc.digest << ")\n";
  return 0;
}

void print_list(const char* title, const std::vector<std::string>& names) {
  std::cout << title << ":\n";
  for (const auto& n : names) std::cout << "  " << n << '\n';
}

int cmd_catalog() {
  print_list("systems", builtin_system_names());
  std::cout << "  (or custom: n, h, V, A, e over q1..qn, u)\n";
  print_list("lifts", lift_kind_names());
  print_list("transforms", catalog_names());
  std::cout << "  (or custom: forward, inverse, nu over q1..qn, u, v)\n";
  print_list("checks", check_names());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nullift: null lifts, dualities and verification scenarios"};
  app.require_subcommand(1);
  std::string config;
  bool json_out = false;
  auto* run = app.add_subcommand("run", "integrate a scenario and run its checks");
  run->add_option("config", config, "scenario file")->required();
  run->add_flag("--json", json_out, "print the report as JSON");
  auto* check = app.add_subcommand("check", "validate a scenario without running it");
  check->add_option("config", config, "scenario file")->required();
  app.add_subcommand("catalog", "list builtin systems, lifts, transforms and checks");
  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, json_out);
    if (*check) return cmd_check(config);
    return cmd_catalog();
  } catch (const nullift::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const nullift::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

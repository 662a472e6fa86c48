// SPDX-License-Identifier: Apache-2.0
// Scenario runner: every subcommand reads a YAML config and writes
// solution.csv and summary.json. Exit code 0 on success, 2 when a check
// fails, 1 on errors.
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "pucci/errors.hpp"
#include "pucci/scenario.hpp"

namespace {

struct Invocation {
  std::string config;
  std::string out = "out";
};

int run(pucci::Mode mode, const Invocation& inv) {
  try {
    const pucci::ScenarioConfig config = pucci::load_config(inv.config);
    const pucci::ScenarioResult result = pucci::run_scenario(config, mode);
    pucci::write_outputs(result, config, inv.out);
    for (const pucci::Check& c : result.checks)
      std::printf("%s %s (margin %.6g)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.margin);
    return pucci::exit_code(result);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extremal nonlocal operator scenarios"};
  app.require_subcommand(1);
  Invocation inv;
  pucci::Mode mode = pucci::Mode::solve;
  const std::pair<pucci::Mode, const char*> commands[] = {
      {pucci::Mode::solve, "Solve the semilinear problem by the sandwich construction"},
      {pucci::Mode::eigen, "Principal eigenpair and its domain-scaling check"},
      {pucci::Mode::barriers, "Build the radial barrier and sample its inequalities"},
      {pucci::Mode::hopf, "Solve and probe the boundary quotient u / d^s"},
      {pucci::Mode::threshold, "Bisect the exterior level at which min u vanishes"},
      {pucci::Mode::sweep, "Sweep the negative exterior amplitude"},
      {pucci::Mode::validate_operator, "Algebraic checks of the discrete operators"},
  };
  for (const auto& [m, help] : commands) {
    CLI::App* sub = app.add_subcommand(std::string(pucci::to_string(m)), help);
    sub->add_option("--config", inv.config, "Scenario YAML file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", inv.out, "Output directory")->capture_default_str();
    sub->callback([&mode, m = m] { mode = m; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  return run(mode, inv);
}

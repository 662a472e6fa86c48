// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pucci/domain_grid.hpp"
#include "pucci/nonlocal_operator.hpp"
#include "pucci/solvers.hpp"

namespace pucci {

enum class Mode { solve, eigen, barriers, hopf, threshold, sweep, validate_operator };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);

struct DomainConfig {
  int dim = 1;
  DomainKind kind = DomainKind::interval;
  Extent extent;
  double h = 1.0 / 128.0;
  double r_trunc = 10.0;
};

struct KernelConfig {
  double s = 0.5;
  double lambda = 1.0;
  double Lambda = 1.0;
  double c_norm = 1.0;
  int n_dirs = 16;
  int radial_points = 6;
};

/// a(x) = value + slope . (x - center).
struct WeightConfig {
  double value = 1.0;
  Point slope{0.0, 0.0};
};

struct ProblemConfig {
  Extremal sign = Extremal::minus;
  double q = 0.5;
  WeightConfig a;
  std::vector<Shell> shells;
  double far_value = 0.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  /// Dead-core threshold; unset means 10 * tol_residual.
  std::optional<double> tol_zero;
  /// Hopf probe depth in units of h.
  double probe_depth_factor = 8.0;
  // threshold
  double M_lo = 0.0;
  double M_hi = 6.0;
  double tol_M = 1e-6;
  double tol_min = 1e-3;
  double dead_core_offset = 0.1;
  /// Required growth exponent as a multiple of s.
  double growth_factor = 1.8;
  // sweep
  std::vector<double> amplitudes{0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  // barriers
  double vminus_sup = 0.0;
  int phi_levels = 8;
  double phi_growth = 2.0;
  // validate-operator
  int samples = 20;
  int evaluations = 1000;
  double barrier_radius = 0.9;
  double barrier_tol = 0.02;
};

struct ScenarioConfig {
  std::string id = "scenario";
  DomainConfig domain;
  KernelConfig kernel;
  ProblemConfig problem;
  SolverConfig solver;
  ExperimentConfig experiment;

  double tol_zero() const { return experiment.tol_zero.value_or(10.0 * solver.tol_residual); }
  GridPtr make_grid() const;
  KernelSpec make_kernel() const;
  ExteriorSpec make_exterior() const;
  Eigen::VectorXd make_weight(const DomainGrid& grid) const;
};

/// Parses YAML text. Unknown keys, wrong types and out-of-range values throw
/// ConfigError carrying the key path and line.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

struct Check {
  std::string name;
  bool pass;
  double margin;
};

struct ScenarioResult {
  std::string id;
  Mode mode = Mode::solve;
  /// Field written to the solution CSV; every summary value refers to it.
  std::optional<Field> u;
  /// Pointwise residual column of the CSV (see README for its meaning per mode).
  Eigen::VectorXd residual;
  std::optional<double> lambda1;
  std::optional<double> m_star;
  std::vector<Check> checks;
  /// Mode-specific payload, serialized JSON object.
  std::string details;

  bool passed() const;
};

ScenarioResult run_scenario(const ScenarioConfig& config, Mode mode);

/// Summary JSON: min_u, max_u, l1s_neg, residual, lambda1 (when computed),
/// dead_core_count, hopf_min_quotient, m_star (when computed), checks, details.
std::string summary_json(const ScenarioResult& result, const ScenarioConfig& config);

/// Solution CSV with header x[,y],u,d,residual.
std::string solution_csv(const ScenarioResult& result);

/// Writes solution.csv and summary.json into `out_dir` (created if missing).
void write_outputs(const ScenarioResult& result, const ScenarioConfig& config,
                   const std::filesystem::path& out_dir);

/// 0 when every check passed, 2 otherwise.
int exit_code(const ScenarioResult& result);

}  // namespace pucci

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "pucci/domain_grid.hpp"
#include "pucci/nonlocal_operator.hpp"

namespace pucci {

using OperatorPtr = std::shared_ptr<const NonlocalOperator>;

/// M^sign[u] + a(x) (u^+)^q = 0 in Omega, u = g outside.
struct Problem {
  OperatorPtr op;
  Extremal sign = Extremal::minus;
  Eigen::VectorXd weight_a;
  double q = 0.5;
  ExteriorSpec exterior;

  static Problem make(OperatorPtr op, Extremal sign, Eigen::VectorXd weight_a, double q,
                      ExteriorSpec exterior);
  /// Constant weight a.
  static Problem make(OperatorPtr op, Extremal sign, double a, double q, ExteriorSpec exterior);
  void validate() const;

  const DomainGrid& grid() const { return op->grid(); }
  const GridPtr& grid_ptr() const { return op->grid_ptr(); }
};

struct SolverConfig {
  /// Explicit step tau = tau_factor / diagonal_bound of the operator.
  double tau_factor = 0.9;
  double tol_residual = 1e-6;
  int max_iter = 500000;
  int policy_max_outer = 100;
  void validate() const;
};

struct SolveResult {
  Field u;
  std::vector<double> history;  // max |residual| before each step
  double residual = 0.0;
  int iterations = 0;
};

/// Explicit monotone iteration u <- u + tau (M^sign[u] + a (u^+)^q) with the
/// exterior frozen. Throws NonConvergence at max_iter, and Instability on
/// non-finite values or after 100 consecutive residual increases ending above
/// ten times the initial residual.
SolveResult pseudo_time_solve(const Problem& p, const SolverConfig& cfg, const Field& init);
SolveResult pseudo_time_solve(const Problem& p, const SolverConfig& cfg);

struct PolicyResult {
  Field u;
  int outer_iterations = 0;
  /// Outer limit reached with the policy still changing; `u` is the iterate
  /// with the smallest residual.
  bool policy_cycle = false;
  double residual = 0.0;
  std::vector<Eigen::VectorXd> iterates;
};

/// Howard iteration for M^sign[u] = rhs in Omega, u = exterior outside.
PolicyResult policy_iteration_solve(const NonlocalOperator& op, Extremal sign,
                                    const Eigen::VectorXd& rhs, const ExteriorSpec& exterior,
                                    const SolverConfig& cfg);

struct EigenPair {
  double lambda1 = 0.0;
  Field phi1;
  double residual = 0.0;
  int iterations = 0;
};

/// Principal eigenpair M^sign[phi] = -lambda phi, phi = 0 outside, max phi = 1,
/// by inverse power iteration over policy-iteration solves.
EigenPair principal_eigenpair(const NonlocalOperator& op, Extremal sign, const SolverConfig& cfg);

struct Supersolution {
  Field upper;
  double psi_sup = 0.0;
  double k = 0.0;
};

/// k Psi with M^sign[Psi] = -max |a| in Omega, Psi = g^+ outside, and
/// k = max(1, sup Psi^{q/(1-q)}); returned with exterior g, where it is a
/// supersolution of the problem.
Supersolution supersolution(const Problem& p, const SolverConfig& cfg);

/// Nodewise comparison data of the sandwich construction.
struct SandwichCertificate {
  double lambda1 = 0.0;
  double a0 = 0.0;
  double epsilon = 0.0;
  double k = 0.0;
  double psi_sup = 0.0;
  Point ball_center{0.0, 0.0};
  double ball_radius = 0.0;
  bool ball_is_domain = false;
  double lower_margin = 0.0;  // min (u - lower)
  double upper_margin = 0.0;  // min (upper - u)
  double residual = 0.0;
  int iterations = 0;
  /// A margin fell below -tol_residual.
  bool sandwich_violation = false;
};

struct SandwichResult {
  Field u;
  Field lower;
  Field upper;
  SandwichCertificate certificate;
};

/// Sub/supersolution pair eps*phi1 <= u <= k*Psi and the solution obtained by
/// descending from the supersolution.
SandwichResult existence_sandwich(const Problem& p, const SolverConfig& cfg);

/// M^sign[u] + a (u^+)^q at every interior node.
Eigen::VectorXd residual(const Problem& p, const Field& u);

}  // namespace pucci

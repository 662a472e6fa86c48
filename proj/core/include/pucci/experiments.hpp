// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pucci/domain_grid.hpp"
#include "pucci/nonlocal_operator.hpp"
#include "pucci/solvers.hpp"

namespace pucci {

enum class Verdict { strictly_positive, dead_core, trivial };

std::string_view to_string(Verdict verdict);

/// Minimum of u / d^s over the near-boundary nodes of one boundary segment.
struct HopfSegment {
  std::string name;
  double min_quotient;  // +inf when the segment has no probed node
  std::size_t samples;
};

struct SmpReport {
  std::vector<std::size_t> dead_core;  // nodes with u <= tol_zero, ascending
  std::vector<HopfSegment> hopf;
  double hopf_min;  // over all segments
  Verdict verdict;
};

/// Dead core, Hopf quotient profile and verdict of a grid solution. The
/// verdict is trivial when |u| <= tol_zero everywhere, strictly_positive when
/// the dead core is empty, dead_core otherwise. Segments: the two ends of an
/// interval, eight angular sectors of a disk, the four sides of a box.
SmpReport smp_check(const Field& u, double s, double tol_zero, double probe_depth);

struct LocalizationCheck {
  bool pass;
  std::vector<std::size_t> argmax;  // every node attaining max u
};

/// Passes iff a > 0 at every maximizer of u.
LocalizationCheck max_localization_check(const Field& u, const Eigen::VectorXd& a);

/// int_{|y - x0| > R} |y - x0|^{-n-2s} dy = |S^{n-1}| R^{-2s} / (2s).
double tail_constant(int dim, double s, double R);

/// Largest distance from x0 to the boundary of the grid's domain.
double enclosing_radius(const DomainGrid& grid, const Point& x0);

struct WeightBound {
  std::size_t node;  // x0, the maximizer of u
  double R;
  double C_n;
  double margin;         // with the requested ellipticity factor
  double margin_lambda;  // with lambda
  double margin_Lambda;  // with Lambda
};

/// margin = a(x0) - c_norm * factor * C_n(x0) * u(x0)^{1-q} at the maximizer x0
/// of u, with Omega inside B_R(x0) (R <= 0 selects enclosing_radius).
WeightBound weight_bound_check(const Field& u, const Eigen::VectorXd& a, double q,
                               const KernelSpec& kernel, double R, double ellipticity_factor);

/// int_{R^n \ Omega} g(y) |y - x0|^{-n-2s} dy for the exterior data g of u,
/// x0 = node `node`, by ray-wise closed forms.
double exterior_tail_check(const Field& u, std::size_t node, double s);

/// Exterior data of the threshold family: 0 on [R, 2R), 1 - M on [2R, 3R) and
/// 1 beyond, R = inradius of the grid.
ExteriorSpec threshold_exterior(const DomainGrid& grid, double M);

struct ThresholdSetup {
  OperatorPtr op;
  Extremal sign = Extremal::minus;
  Eigen::VectorXd weight_a;
  double q = 0.5;
  SolverConfig solver;
};

struct LadderRow {
  double M;
  double min_u;
  double max_u;
};

struct ThresholdResult {
  double M_star;
  std::vector<LadderRow> ladder;  // ascending in M
  Field u_star;
  double residual;
};

/// Solution of the threshold family at M, descending from `start` when given
/// (a solution at a smaller M is a supersolution) and from the supersolution
/// of the problem otherwise.
SolveResult threshold_solve(const ThresholdSetup& setup, double M, const Field* start = nullptr);

/// Bisection on M for min u_M = 0. Stops once |min u| <= tol_min or the
/// bracket is shorter than tol_M. Throws BracketFailure when min u does not
/// change sign on [M_lo, M_hi] and MonotonicityViolation when the ladder of
/// min u_M is not strictly decreasing in M.
ThresholdResult threshold_search(const ThresholdSetup& setup, double M_lo, double M_hi,
                                 double tol_M, double tol_min);

/// Exterior data of the sweep family: 0 on [R, 2R), -amplitude on [2R, 3R),
/// 0 beyond, R = inradius of the grid.
ExteriorSpec sweep_exterior(const DomainGrid& grid, double amplitude);

struct SweepRow {
  double amplitude;
  double l1s_neg;
  double min_u;
  double hopf_min;
  Verdict verdict;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ascending in amplitude
  std::vector<Field> solutions;  // one per row
  /// First amplitude whose verdict is not strictly_positive.
  std::optional<double> onset;
  /// Number of verdict changes between consecutive rows.
  int transitions = 0;
};

/// Solves the sweep family for ascending amplitudes, each row descending from
/// the previous solution.
SweepResult norm_sweep(const ThresholdSetup& setup, std::vector<double> amplitudes,
                       double tol_zero, double probe_depth);

struct GrowthFit {
  Point free_boundary;  // fitted location of the zero crossing
  Point direction;      // unit lattice direction into the positivity set
  double exponent;
  std::size_t samples;
};

/// For every lattice edge from a dead-core node to a node with u > tol_zero,
/// fits u(y) = C |y - z|^p along the edge line over positive nodes within
/// 8h of the crossing, jointly in the crossing z and the exponent p. Edges
/// with fewer than 4 samples are skipped; InsufficientSamples when none is
/// left.
std::vector<GrowthFit> growth_exponent_fit(const Field& u, const std::vector<std::size_t>& dead_core,
                                           double tol_zero);

}  // namespace pucci

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pucci/domain_grid.hpp"

namespace pucci {

/// Which extremal operator: M+ (sup over the kernel class) or M- (inf).
enum class Extremal { plus, minus };

std::string_view to_string(Extremal sign);
Extremal extremal_from_string(std::string_view name);

/// One representative of an antipodal pair of directions and its weight on
/// the half sphere.
struct Direction {
  Point theta;
  double weight;
};

/// Parameters of the kernel class: order s, ellipticity bounds lambda <= Lambda,
/// the normalization c_norm, and the direction quadrature of the half sphere.
///
/// The operators act as c_norm * sum_j w_j mu_j I_j with
/// I_j(x) = int_0^inf (u(x + r theta_j) + u(x - r theta_j) - 2u(x)) r^{-1-2s} dr,
/// so c_norm multiplies half of the full-space integral. With c_norm equal to
/// fractional_laplacian_constant(n, s) and mu = 1 this is -(-Delta)^s.
struct KernelSpec {
  double s = 0.5;
  double lambda = 1.0;
  double Lambda = 1.0;
  double c_norm = 1.0;
  std::vector<Direction> directions;
  /// Gauss-Legendre points per radial panel (4, 6, 8 or 10).
  int radial_points = 6;
  /// The near panel is [0, near_factor * h].
  double near_factor = 1.0;

  /// Uniform half-circle directions (dim 2) or {e1} (dim 1).
  static KernelSpec make(int dim, double s, double lambda, double Lambda, double c_norm = 1.0,
                         int n_dirs = 16);
  void validate() const;
};

/// Standard constant C_{n,s} = s 4^s Gamma(n/2 + s) / (pi^{n/2} Gamma(1 - s)).
double fractional_laplacian_constant(int dim, double s);

enum class NormalizationPreset { unit, one_minus_s, fractional_laplacian };
NormalizationPreset normalization_preset_from_string(std::string_view name);
double normalization(NormalizationPreset preset, int dim, double s);

/// Per-node, per-direction kernel weights mu_j(x) in [lambda, Lambda].
class PolicyField {
 public:
  PolicyField(std::size_t nodes, std::size_t directions, double value);

  double operator()(std::size_t node, std::size_t dir) const {
    return mu_(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(dir));
  }
  double& operator()(std::size_t node, std::size_t dir) {
    return mu_(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(dir));
  }
  std::size_t nodes() const { return static_cast<std::size_t>(mu_.rows()); }
  std::size_t directions() const { return static_cast<std::size_t>(mu_.cols()); }
  const Eigen::MatrixXd& matrix() const { return mu_; }

  /// Throws InvalidArgument when a weight leaves [lambda, Lambda].
  void validate(const KernelSpec& kernel) const;

  bool operator==(const PolicyField& other) const { return mu_ == other.mu_; }

 private:
  Eigen::MatrixXd mu_;
};

/// Exterior contributions b_j (one vector per direction) of a given ExteriorSpec.
struct ExteriorTerms {
  std::vector<Eigen::VectorXd> per_direction;
};

/// Discretized directional integrals on a grid. For each direction the integral
/// at every interior node is affine in the nodal values, I_j = A_j u + b_j, where
/// A_j collects the radial quadrature of the interior interpolant and b_j the
/// closed-form shell and tail integrals of the exterior data.
///
/// Radial rule: on [0, r0] (r0 = near_factor * h) the second difference is
/// replaced by (r / r0)^2 delta(x, r0 theta), exact for quadratics; inside
/// Omega, panels split at every lattice-line crossing carry Gauss rules
/// rescaled to integrate the kernel exactly; outside Omega the integrand is
/// piecewise constant and integrated in closed form.
class NonlocalOperator {
 public:
  NonlocalOperator(GridPtr grid, KernelSpec kernel);

  const DomainGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const KernelSpec& kernel() const { return kernel_; }
  std::size_t size() const { return grid_->size(); }
  std::size_t num_directions() const { return kernel_.directions.size(); }

  ExteriorTerms exterior_terms(const ExteriorSpec& exterior) const;
  double exterior_term(const ExteriorSpec& exterior, std::size_t node, std::size_t dir) const;

  /// All directional integrals, an (nodes x directions) matrix.
  Eigen::MatrixXd directional_integrals(const Eigen::VectorXd& u, const ExteriorTerms& b) const;
  double directional_integral(const Eigen::VectorXd& u, const ExteriorSpec& exterior,
                              std::size_t node, std::size_t dir) const;

  /// Dense matrix of u -> L_mu u without the exterior part.
  Eigen::MatrixXd linear_matrix(const PolicyField& mu) const;
  /// Exterior part of L_mu: c_norm sum_j w_j mu_j b_j.
  Eigen::VectorXd linear_offset(const PolicyField& mu, const ExteriorTerms& b) const;

  /// max_i c_norm Lambda sum_j w_j |A_j(i, i)|: the explicit-step stability bound.
  double diagonal_bound() const;

  /// A_j as a dense matrix.
  Eigen::MatrixXd direction_matrix(std::size_t dir) const;

 private:
  struct Hook {
    double ghost = 0.0;
    double tail_start[2] = {0.0, 0.0};
    double near_radius[2] = {0.0, 0.0};
    double near_weight[2] = {0.0, 0.0};
  };

  Eigen::VectorXd apply_direction(std::size_t dir, const Eigen::VectorXd& u) const;
  double row_dot(std::size_t dir, std::size_t node, const Eigen::VectorXd& u) const;
  double hook_value(const ExteriorSpec& exterior, std::size_t node, std::size_t dir) const;

  GridPtr grid_;
  KernelSpec kernel_;
  bool dense_ = true;
  std::vector<Eigen::MatrixXd> dense_rows_;
  std::vector<Eigen::SparseMatrix<double, Eigen::RowMajor>> sparse_rows_;
  std::vector<std::vector<Hook>> hooks_;  // [dir][node]
  std::vector<double> diagonal_;          // [dir * n + node]
};

/// int_{r_start}^inf g(c + offset + r dir) r^{-1-2s} dr for exterior data g about
/// the center c, in closed form (g is constant between shell crossings).
double exterior_ray_integral(const ExteriorSpec& exterior, const Point& offset, const Point& dir,
                             double r_start, double s);

/// delta(x, y) = f(x + y) + f(x - y) - 2 f(x).
double second_difference(const Field& f, const Point& x, const Point& y);

double directional_integral(const NonlocalOperator& op, const Field& f, std::size_t node,
                            std::size_t dir);

/// Extremal value at a node: the optimum over mu is attained direction by
/// direction, Lambda I^+ - lambda I^- for M+ and lambda I^+ - Lambda I^- for M-.
double eval_extremal(const NonlocalOperator& op, const Field& f, std::size_t node, Extremal sign);

double eval_linear(const NonlocalOperator& op, const Field& f, std::size_t node,
                   const PolicyField& mu);

/// Policy attaining the extremum (ties I_j = 0 resolve to lambda).
PolicyField optimal_policy(const NonlocalOperator& op, const Field& f, Extremal sign);

/// M^sign[f] at every interior node.
Eigen::VectorXd operator_apply(const NonlocalOperator& op, const Field& f, Extremal sign);

// Helpers acting on precomputed directional integrals (nodes x directions).
Eigen::VectorXd extremal_from_integrals(const KernelSpec& kernel, const Eigen::MatrixXd& integrals,
                                        Extremal sign);
PolicyField policy_from_integrals(const KernelSpec& kernel, const Eigen::MatrixXd& integrals,
                                  Extremal sign);
Eigen::VectorXd linear_from_integrals(const KernelSpec& kernel, const Eigen::MatrixXd& integrals,
                                      const PolicyField& mu);

}  // namespace pucci

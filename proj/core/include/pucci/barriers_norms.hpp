// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pucci/domain_grid.hpp"
#include "pucci/nonlocal_operator.hpp"

namespace pucci {

/// Weighted norm int_{R^n} |u(x)| / (1 + |x|^{n+2s}) dx of the function
/// represented by `f` (interior interpolant plus exterior data).
double l1s_norm(const Field& f, double s);

/// Exterior part of l1s_norm alone.
double l1s_norm_exterior(const DomainGrid& grid, const ExteriorSpec& exterior, double s);

/// dist(x, R^n \ B_1)^s.
double rho1(const Point& x, double s);
/// dist(x, R^n \ B_1)^{3s/2}.
double rho2(const Point& x, double s);

/// One sampled inequality lhs >= rhs of a barrier system (slack = lhs - rhs).
struct Margin {
  std::string line;
  Point point;
  double lhs;
  double rhs;
  double slack;
};

/// Sampled margins of a barrier construction. Entries are only appended.
class BarrierReport {
 public:
  explicit BarrierReport(std::string name) : name_(std::move(name)) {}

  void set_parameter(const std::string& key, double value);
  void append(std::string line, const Point& point, double lhs, double rhs);

  const std::string& name() const { return name_; }
  const std::vector<std::pair<std::string, double>>& parameters() const { return parameters_; }
  double parameter(const std::string& key) const;
  const std::vector<Margin>& margins() const { return margins_; }

  /// Smallest slack on one line (+inf when the line has no samples).
  double min_slack(const std::string& line) const;
  std::size_t violations(const std::string& line) const;

  std::string to_json() const;

 private:
  std::string name_;
  std::vector<std::pair<std::string, double>> parameters_;
  std::vector<Margin> margins_;
};

/// Radial subsolution phi = c * max_{0<=k<=N} C^k rho(2^{k/N} x), rho = rho1 + rho2,
/// with c = 1 / (2 C^N) so that phi(0) = 1 = max phi on B_{1/2}.
class PhiBarrier {
 public:
  PhiBarrier(double s, int N, double C_growth);

  double operator()(const Point& y) const;
  double s() const { return s_; }
  int N() const { return N_; }
  double C_growth() const { return C_growth_; }
  /// The constant c of the system (also the lower-bound constant).
  double c() const { return c_; }

 private:
  double s_;
  int N_;
  double C_growth_;
  double c_;
};

struct PhiResult {
  PhiBarrier barrier;
  Field field;
  BarrierReport report;
};

/// Builds phi on a unit-ball grid (interval (-1,1) or unit disk at the origin)
/// and samples the four lines of its system. The three pointwise lines are
/// exact; the subsolution line M^-[phi] - V^- phi >= c on B_1 \ B_{1/2} is
/// reported with margins. Also records measured barrier constants of rho1 and
/// rho2 and the inner-annulus width epsilon derived from them.
PhiResult build_phi(const NonlocalOperator& op, double vminus_sup, int N = 8, double C_growth = 2.0);

struct PsiResult {
  Field field;
  BarrierReport report;
};

/// psi_r(x) = alpha_r phi((x - x_r) / r) on `grid`, checked against
/// psi_r >= c alpha_r r^{-s} (r - |x - x_r|)^s on the nodes of B_r(x_r).
PsiResult psi_r(const PhiBarrier& phi, const GridPtr& grid, const Point& x_r, double r,
                double alpha_r);

/// (1 - s) (d0^{-(n+2s)} + 2^{n+2s}) Lambda.
double negpart_bound_constant(double d0, double s, int dim, double Lambda);

struct HopfCheck {
  bool holds;
  double margin;  // rhs - lhs
};

/// C_tilde ||u^-|| < (alpha_r / r^{2s}) c_barrier.
HopfCheck hopf_condition_check(double C_tilde, double norm_uminus, double alpha_r, double r,
                               double s, double c_barrier);

}  // namespace pucci

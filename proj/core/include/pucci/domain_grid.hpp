// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace pucci {

/// A point of R^n, n <= 2. One-dimensional points leave the second slot at 0.
using Point = std::array<double, 2>;

inline Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Point operator*(double t, const Point& a) { return {t * a[0], t * a[1]}; }
inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Point& a) { return std::hypot(a[0], a[1]); }

enum class DomainKind { interval, disk, box };

std::string_view to_string(DomainKind kind);
DomainKind domain_kind_from_string(std::string_view name);

/// Geometric size of a domain: half-length (interval), radius (disk) or the
/// two half-widths (box), plus the center.
struct Extent {
  double half_x = 1.0;
  double half_y = 0.0;  // box only
  Point center{0.0, 0.0};
};

/// Constant exterior value on the annulus r_inner <= |x - center| < r_outer.
struct Shell {
  double r_inner;
  double r_outer;
  double value;
  bool operator==(const Shell&) const = default;
};

/// Certificate |g(x)| <= C_g (1 + |x|)^{1 + alpha} for the exterior data.
struct TailGrowth {
  double C_g;
  double alpha;
  bool operator==(const TailGrowth&) const = default;
};

/// Piecewise-constant data on R^n \ Omega: ordered contiguous shells about the
/// domain center and one far constant beyond the last shell. Points closer to
/// the center than the first shell (box corners) take the first shell value.
class ExteriorSpec {
 public:
  ExteriorSpec() = default;
  ExteriorSpec(std::vector<Shell> shells, double far_value,
               std::optional<TailGrowth> tail_growth = std::nullopt);

  static ExteriorSpec constant(double value) { return ExteriorSpec({}, value); }

  double value_at_radius(double rho) const;

  /// Value the interior interpolant takes on the boundary of Omega.
  double trace_value() const { return shells_.empty() ? far_value_ : shells_.front().value; }

  std::span<const Shell> shells() const { return shells_; }
  double far_value() const { return far_value_; }
  /// Radius beyond which the far value applies (0 when there are no shells).
  double far_start() const { return shells_.empty() ? 0.0 : shells_.back().r_outer; }
  const std::optional<TailGrowth>& tail_growth() const { return tail_growth_; }

  /// Every shell radius, in increasing order.
  std::vector<double> radii() const;

  ExteriorSpec scaled(double factor) const;
  /// Every value increased by `offset`.
  ExteriorSpec shifted(double offset) const;
  ExteriorSpec negative_part() const;
  ExteriorSpec positive_part() const;
  ExteriorSpec with_shell_value(std::size_t index, double value) const;
  /// Same values on shells with every radius multiplied by `factor`.
  ExteriorSpec dilated(double factor) const;

  bool nonpositive() const;
  bool same_geometry(const ExteriorSpec& other) const;
  bool operator==(const ExteriorSpec&) const = default;

 private:
  std::vector<Shell> shells_;
  double far_value_ = 0.0;
  std::optional<TailGrowth> tail_growth_;
};

/// Interpolation weights of a point inside Omega. `ghost` is the weight put on
/// the boundary trace value of the exterior data.
struct InterpStencil {
  std::array<int, 4> node{-1, -1, -1, -1};
  std::array<double, 4> weight{0.0, 0.0, 0.0, 0.0};
  int count = 0;
  double ghost = 0.0;
};

/// Uniform lattice restricted to a convex domain. Interior nodes are the
/// lattice points c + h*(i, j) strictly inside Omega; immutable once built.
class DomainGrid {
 public:
  static DomainGrid build(int dim, DomainKind kind, const Extent& extent, double h,
                          double r_trunc);

  int dim() const { return dim_; }
  DomainKind kind() const { return kind_; }
  const Extent& extent() const { return extent_; }
  const Point& center() const { return extent_.center; }
  double h() const { return h_; }
  double r_trunc() const { return r_trunc_; }
  std::size_t size() const { return nodes_.size(); }

  std::span<const Point> nodes() const { return nodes_; }
  const Point& node(std::size_t i) const { return nodes_[i]; }
  std::span<const double> distance() const { return distance_; }
  double distance(std::size_t i) const { return distance_[i]; }
  std::array<int, 2> lattice(std::size_t i) const { return lattice_[i]; }

  /// Node index of lattice point (i, j), or -1 when it is not an interior node.
  int node_at(int i, int j = 0) const;

  bool contains(const Point& p) const;
  double boundary_distance(const Point& p) const;
  /// Smallest |p - center| over the boundary.
  double inradius() const;
  /// Largest |p - center| over the boundary.
  double outradius() const;
  double diameter() const { return 2.0 * outradius(); }

  /// Parameter r > 0 at which x + r*dir leaves Omega (x inside, |dir| = 1).
  double exit_distance(const Point& x, const Point& dir) const;

  InterpStencil interpolate(const Point& p) const;

  /// Grid of the domain scaled by `factor` about the origin, with h scaled too.
  DomainGrid scaled(double factor) const;

 private:
  DomainGrid() = default;

  int dim_ = 1;
  DomainKind kind_ = DomainKind::interval;
  Extent extent_;
  double h_ = 0.0;
  double r_trunc_ = 0.0;
  std::vector<Point> nodes_;
  std::vector<double> distance_;
  std::vector<std::array<int, 2>> lattice_;
  int lattice_radius_x_ = 0;
  int lattice_radius_y_ = 0;
  std::vector<int> lookup_;
};

using GridPtr = std::shared_ptr<const DomainGrid>;

inline GridPtr build_grid(int dim, DomainKind kind, const Extent& extent, double h,
                          double r_trunc) {
  return std::make_shared<const DomainGrid>(DomainGrid::build(dim, kind, extent, h, r_trunc));
}

/// Grid function: nodal values inside Omega plus exterior data on the
/// complement. Together they define a function on all of R^n.
class Field {
 public:
  Field(GridPtr grid, Eigen::VectorXd values, ExteriorSpec exterior = {});
  static Field zeros(GridPtr grid, ExteriorSpec exterior = {});

  template <class F>
  static Field sample(GridPtr grid, F&& f, ExteriorSpec exterior = {}) {
    Eigen::VectorXd v(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i) v[static_cast<Eigen::Index>(i)] = f(grid->node(i));
    return Field(std::move(grid), std::move(v), std::move(exterior));
  }

  const DomainGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& values() { return values_; }
  const ExteriorSpec& exterior() const { return exterior_; }

  Field negative_part() const;
  Field scaled(double factor) const;

  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }

 private:
  GridPtr grid_;
  Eigen::VectorXd values_;
  ExteriorSpec exterior_;
};

/// Value of the function represented by `f` at any point of R^n.
double eval_anywhere(const Field& f, const Point& x);

/// Exterior data checked against a grid: shells must start inside the
/// boundary layer and end at or before the truncation radius.
void validate_exterior(const DomainGrid& grid, const ExteriorSpec& exterior);

}  // namespace pucci

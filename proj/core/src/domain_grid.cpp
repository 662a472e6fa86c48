// SPDX-License-Identifier: Apache-2.0
#include "pucci/domain_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pucci/errors.hpp"

namespace pucci {

namespace {

// Lattice points closer than this (relative to h) to the boundary are not nodes.
constexpr double kBoundaryTolerance = 1e-9;

bool close(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

std::string_view to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::interval: return "interval";
    case DomainKind::disk: return "disk";
    case DomainKind::box: return "box";
  }
  return "interval";
}

DomainKind domain_kind_from_string(std::string_view name) {
  if (name == "interval") return DomainKind::interval;
  if (name == "disk") return DomainKind::disk;
  if (name == "box") return DomainKind::box;
  throw InvalidArgument("unknown domain kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// ExteriorSpec

ExteriorSpec::ExteriorSpec(std::vector<Shell> shells, double far_value,
                           std::optional<TailGrowth> tail_growth)
    : shells_(std::move(shells)), far_value_(far_value), tail_growth_(tail_growth) {
  if (!std::isfinite(far_value_)) throw InvalidArgument("exterior far value must be finite");
  for (std::size_t k = 0; k < shells_.size(); ++k) {
    const Shell& sh = shells_[k];
    if (!(sh.r_inner >= 0.0) || !(sh.r_outer > sh.r_inner) || !std::isfinite(sh.r_outer))
      throw InvalidArgument("shell " + std::to_string(k) + " needs 0 <= r_inner < r_outer");
    if (!std::isfinite(sh.value))
      throw InvalidArgument("shell " + std::to_string(k) + " value must be finite");
    if (k > 0 && !close(shells_[k - 1].r_outer, sh.r_inner))
      throw InvalidArgument("shells must be ordered and contiguous (gap or overlap before shell " +
                            std::to_string(k) + ")");
  }
  if (tail_growth_ && (!(tail_growth_->C_g >= 0.0) || !std::isfinite(tail_growth_->alpha)))
    throw InvalidArgument("tail growth needs C_g >= 0 and finite alpha");
}

double ExteriorSpec::value_at_radius(double rho) const {
  if (shells_.empty() || rho >= shells_.back().r_outer) return far_value_;
  for (const Shell& sh : shells_)
    if (rho < sh.r_outer) return sh.value;
  return far_value_;
}

std::vector<double> ExteriorSpec::radii() const {
  std::vector<double> r;
  if (shells_.empty()) return r;
  r.push_back(shells_.front().r_inner);
  for (const Shell& sh : shells_) r.push_back(sh.r_outer);
  return r;
}

ExteriorSpec ExteriorSpec::scaled(double factor) const {
  ExteriorSpec out = *this;
  for (Shell& sh : out.shells_) sh.value *= factor;
  out.far_value_ *= factor;
  return out;
}

ExteriorSpec ExteriorSpec::shifted(double offset) const {
  ExteriorSpec out = *this;
  for (Shell& sh : out.shells_) sh.value += offset;
  out.far_value_ += offset;
  return out;
}

ExteriorSpec ExteriorSpec::negative_part() const {
  ExteriorSpec out = *this;
  for (Shell& sh : out.shells_) sh.value = std::max(-sh.value, 0.0);
  out.far_value_ = std::max(-far_value_, 0.0);
  return out;
}

ExteriorSpec ExteriorSpec::positive_part() const {
  ExteriorSpec out = *this;
  for (Shell& sh : out.shells_) sh.value = std::max(sh.value, 0.0);
  out.far_value_ = std::max(far_value_, 0.0);
  return out;
}

ExteriorSpec ExteriorSpec::with_shell_value(std::size_t index, double value) const {
  if (index >= shells_.size()) throw InvalidArgument("shell index out of range");
  ExteriorSpec out = *this;
  out.shells_[index].value = value;
  return out;
}

ExteriorSpec ExteriorSpec::dilated(double factor) const {
  ExteriorSpec out = *this;
  for (Shell& sh : out.shells_) {
    sh.r_inner *= factor;
    sh.r_outer *= factor;
  }
  return out;
}

bool ExteriorSpec::nonpositive() const {
  if (far_value_ > 0.0) return false;
  return std::none_of(shells_.begin(), shells_.end(), [](const Shell& s) { return s.value > 0.0; });
}

bool ExteriorSpec::same_geometry(const ExteriorSpec& other) const {
  if (shells_.size() != other.shells_.size()) return false;
  for (std::size_t k = 0; k < shells_.size(); ++k)
    if (shells_[k].r_inner != other.shells_[k].r_inner ||
        shells_[k].r_outer != other.shells_[k].r_outer)
      return false;
  return true;
}

// ---------------------------------------------------------------------------
// DomainGrid

DomainGrid DomainGrid::build(int dim, DomainKind kind, const Extent& extent, double h,
                             double r_trunc) {
  if (dim != 1 && dim != 2) throw InvalidArgument("dim must be 1 or 2");
  if (dim == 1 && kind != DomainKind::interval)
    throw InvalidArgument("a one-dimensional domain must be an interval");
  if (dim == 2 && kind == DomainKind::interval)
    throw InvalidArgument("a two-dimensional domain must be a disk or a box");
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("grid spacing h must be positive");

  DomainGrid g;
  g.dim_ = dim;
  g.kind_ = kind;
  g.extent_ = extent;
  if (dim == 1 || kind == DomainKind::disk) g.extent_.half_y = g.extent_.half_x;
  if (dim == 1) g.extent_.center[1] = 0.0;
  g.h_ = h;
  g.r_trunc_ = r_trunc;

  const double smallest = std::min(g.extent_.half_x, g.extent_.half_y);
  if (!(smallest > 0.0)) throw InvalidArgument("domain extent must be positive");
  if (h >= smallest) throw InvalidArgument("grid spacing h must be smaller than the extent");
  if (!(r_trunc > g.diameter()))
    throw InvalidArgument("truncation radius must exceed the domain diameter");

  g.lattice_radius_x_ = static_cast<int>(std::ceil(g.extent_.half_x / h)) + 1;
  g.lattice_radius_y_ = dim == 2 ? static_cast<int>(std::ceil(g.extent_.half_y / h)) + 1 : 0;
  const int nx = 2 * g.lattice_radius_x_ + 1;
  const int ny = 2 * g.lattice_radius_y_ + 1;
  g.lookup_.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), -1);

  const Point& c = g.extent_.center;
  for (int j = -g.lattice_radius_y_; j <= g.lattice_radius_y_; ++j) {
    for (int i = -g.lattice_radius_x_; i <= g.lattice_radius_x_; ++i) {
      const Point p{c[0] + i * h, dim == 2 ? c[1] + j * h : 0.0};
      const double d = g.boundary_distance(p);
      if (d <= kBoundaryTolerance * h) continue;
      g.lookup_[static_cast<std::size_t>((j + g.lattice_radius_y_) * nx + (i + g.lattice_radius_x_))] =
          static_cast<int>(g.nodes_.size());
      g.nodes_.push_back(p);
      g.distance_.push_back(d);
      g.lattice_.push_back({i, j});
    }
  }
  if (g.nodes_.size() < 3) throw InvalidArgument("grid has fewer than 3 interior nodes");
  return g;
}

int DomainGrid::node_at(int i, int j) const {
  if (i < -lattice_radius_x_ || i > lattice_radius_x_ || j < -lattice_radius_y_ ||
      j > lattice_radius_y_)
    return -1;
  const int nx = 2 * lattice_radius_x_ + 1;
  return lookup_[static_cast<std::size_t>((j + lattice_radius_y_) * nx + (i + lattice_radius_x_))];
}

double DomainGrid::boundary_distance(const Point& p) const {
  const Point q = p - extent_.center;
  switch (kind_) {
    case DomainKind::interval: return extent_.half_x - std::abs(q[0]);
    case DomainKind::disk: return extent_.half_x - norm(q);
    case DomainKind::box:
      return std::min(extent_.half_x - std::abs(q[0]), extent_.half_y - std::abs(q[1]));
  }
  return 0.0;
}

bool DomainGrid::contains(const Point& p) const { return boundary_distance(p) > 0.0; }

double DomainGrid::inradius() const { return std::min(extent_.half_x, extent_.half_y); }

double DomainGrid::outradius() const {
  if (kind_ == DomainKind::box) return std::hypot(extent_.half_x, extent_.half_y);
  return extent_.half_x;
}

double DomainGrid::exit_distance(const Point& x, const Point& dir) const {
  const Point q = x - extent_.center;
  switch (kind_) {
    case DomainKind::interval:
      return dir[0] > 0.0 ? (extent_.half_x - q[0]) / dir[0] : (extent_.half_x + q[0]) / -dir[0];
    case DomainKind::disk: {
      const double b = dot(q, dir);
      const double c = dot(q, q) - extent_.half_x * extent_.half_x;
      return -b + std::sqrt(std::max(b * b - c, 0.0));
    }
    case DomainKind::box: {
      double r = std::numeric_limits<double>::infinity();
      const double half[2] = {extent_.half_x, extent_.half_y};
      for (int k = 0; k < 2; ++k) {
        if (dir[k] > 0.0) r = std::min(r, (half[k] - q[k]) / dir[k]);
        if (dir[k] < 0.0) r = std::min(r, (half[k] + q[k]) / -dir[k]);
      }
      return r;
    }
  }
  return 0.0;
}

InterpStencil DomainGrid::interpolate(const Point& p) const {
  InterpStencil st;
  const Point& c = extent_.center;
  if (dim_ == 1) {
    const double t = (p[0] - c[0]) / h_;
    const int i0 = static_cast<int>(std::floor(t));
    const int left = node_at(i0);
    const int right = node_at(i0 + 1);
    // Anchors: interior nodes, or the boundary point carrying the trace value.
    const double xl = left >= 0 ? nodes_[static_cast<std::size_t>(left)][0] : c[0] - extent_.half_x;
    const double xr = right >= 0 ? nodes_[static_cast<std::size_t>(right)][0] : c[0] + extent_.half_x;
    const double wr = std::clamp((p[0] - xl) / (xr - xl), 0.0, 1.0);
    const double wl = 1.0 - wr;
    if (left >= 0) {
      st.node[st.count] = left;
      st.weight[st.count++] = wl;
    } else {
      st.ghost += wl;
    }
    if (right >= 0) {
      st.node[st.count] = right;
      st.weight[st.count++] = wr;
    } else {
      st.ghost += wr;
    }
    return st;
  }
  const double tx = (p[0] - c[0]) / h_;
  const double ty = (p[1] - c[1]) / h_;
  const int i0 = static_cast<int>(std::floor(tx));
  const int j0 = static_cast<int>(std::floor(ty));
  const double fx = tx - i0;
  const double fy = ty - j0;
  const int ci[4] = {i0, i0 + 1, i0, i0 + 1};
  const int cj[4] = {j0, j0, j0 + 1, j0 + 1};
  const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  for (int k = 0; k < 4; ++k) {
    if (w[k] == 0.0) continue;
    const int n = node_at(ci[k], cj[k]);
    if (n >= 0) {
      st.node[st.count] = n;
      st.weight[st.count++] = w[k];
    } else {
      st.ghost += w[k];
    }
  }
  return st;
}

DomainGrid DomainGrid::scaled(double factor) const {
  Extent e = extent_;
  e.half_x *= factor;
  e.half_y *= factor;
  e.center = factor * e.center;
  return build(dim_, kind_, e, h_ * factor, r_trunc_ * factor);
}

// ---------------------------------------------------------------------------
// Field

Field::Field(GridPtr grid, Eigen::VectorXd values, ExteriorSpec exterior)
    : grid_(std::move(grid)), values_(std::move(values)), exterior_(std::move(exterior)) {
  if (!grid_) throw InvalidArgument("field needs a grid");
  if (static_cast<std::size_t>(values_.size()) != grid_->size())
    throw InvalidArgument("field has " + std::to_string(values_.size()) + " values for " +
                          std::to_string(grid_->size()) + " nodes");
  if (!values_.allFinite()) throw InvalidArgument("field values must be finite");
}

Field Field::zeros(GridPtr grid, ExteriorSpec exterior) {
  const auto n = static_cast<Eigen::Index>(grid->size());
  return Field(std::move(grid), Eigen::VectorXd::Zero(n), std::move(exterior));
}

Field Field::negative_part() const {
  return Field(grid_, (-values_).cwiseMax(0.0), exterior_.negative_part());
}

Field Field::scaled(double factor) const {
  return Field(grid_, factor * values_, exterior_.scaled(factor));
}

double eval_anywhere(const Field& f, const Point& x) {
  const DomainGrid& g = f.grid();
  if (!g.contains(x)) return f.exterior().value_at_radius(norm(x - g.center()));
  const InterpStencil st = g.interpolate(x);
  double v = st.ghost * f.exterior().trace_value();
  for (int k = 0; k < st.count; ++k) v += st.weight[k] * f.values()[st.node[k]];
  return v;
}

void validate_exterior(const DomainGrid& grid, const ExteriorSpec& exterior) {
  if (exterior.shells().empty()) return;
  const double first = exterior.shells().front().r_inner;
  if (first > grid.inradius() * (1.0 + 1e-12))
    throw InvalidArgument("first exterior shell must start at or inside the domain boundary");
  if (exterior.far_start() > grid.r_trunc() * (1.0 + 1e-12))
    throw InvalidArgument("exterior shells extend beyond the truncation radius");
}

}  // namespace pucci

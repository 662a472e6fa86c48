// SPDX-License-Identifier: Apache-2.0
#include "pucci/nonlocal_operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "pucci/errors.hpp"

namespace pucci {

namespace {

using Index = Eigen::Index;

// Panels shorter than this fraction of h are dropped (coincident crossings).
constexpr double kMinPanel = 1e-12;

struct GaussRule {
  std::vector<double> x;  // on [-1, 1]
  std::vector<double> w;
};

template <unsigned N>
GaussRule gauss_rule_of() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  GaussRule g;
  const auto& a = Rule::abscissa();
  const auto& w = Rule::weights();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == 0.0) {
      g.x.push_back(0.0);
      g.w.push_back(w[k]);
      continue;
    }
    g.x.push_back(-a[k]);
    g.w.push_back(w[k]);
    g.x.push_back(a[k]);
    g.w.push_back(w[k]);
  }
  return g;
}

GaussRule gauss_rule(int points) {
  switch (points) {
    case 4: return gauss_rule_of<4>();
    case 6: return gauss_rule_of<6>();
    case 8: return gauss_rule_of<8>();
    case 10: return gauss_rule_of<10>();
    default: throw InvalidArgument("radial_points must be 4, 6, 8 or 10");
  }
}

// int_a^b r^{-1-2s} dr, with b = inf allowed.
double kernel_mass(double a, double b, double s) {
  const double tail_b = std::isinf(b) ? 0.0 : std::pow(b, -2.0 * s);
  return (std::pow(a, -2.0 * s) - tail_b) / (2.0 * s);
}

// Dense scratch row with a list of touched columns.
class RowAccumulator {
 public:
  explicit RowAccumulator(std::size_t n) : values_(n, 0.0), mark_(n, 0) {}

  void add(int col, double w) {
    const auto c = static_cast<std::size_t>(col);
    if (!mark_[c]) {
      mark_[c] = 1;
      touched_.push_back(col);
    }
    values_[c] += w;
  }

  void add_stencil(const InterpStencil& st, double w, double& ghost) {
    for (int k = 0; k < st.count; ++k) add(st.node[k], w * st.weight[k]);
    ghost += w * st.ghost;
  }

  // Calls fn(col, value) in increasing column order and clears the row.
  template <class Fn>
  void drain(Fn&& fn) {
    std::sort(touched_.begin(), touched_.end());
    for (int col : touched_) {
      const auto c = static_cast<std::size_t>(col);
      fn(col, values_[c]);
      values_[c] = 0.0;
      mark_[c] = 0;
    }
    touched_.clear();
  }

 private:
  std::vector<double> values_;
  std::vector<char> mark_;
  std::vector<int> touched_;
};

// Radial quadrature of int_{r_begin}^{r_end} u(x + r dir) r^{-1-2s} dr over the
// interior interpolant, panels split where the ray crosses lattice lines.
void accumulate_ray(const DomainGrid& g, const Point& x, const Point& dir, double r_begin,
                    double r_end, double s, const GaussRule& rule, RowAccumulator& row,
                    double& ghost, std::vector<double>& breaks) {
  const double h = g.h();
  breaks.clear();
  breaks.push_back(r_begin);
  for (int k = 0; k < g.dim(); ++k) {
    const double c = std::abs(dir[k]);
    if (c == 0.0) continue;
    const double step = h / c;
    for (double m = std::floor(r_begin / step) + 1.0; m * step < r_end; m += 1.0)
      breaks.push_back(m * step);
  }
  breaks.push_back(r_end);
  std::sort(breaks.begin(), breaks.end());

  const double min_len = kMinPanel * h;
  double a = breaks.front();
  for (std::size_t p = 1; p < breaks.size(); ++p) {
    const double b = breaks[p];
    if (b - a <= min_len) continue;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double raw = 0.0;
    double wq[10];
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      const double r = mid + half * rule.x[q];
      wq[q] = half * rule.w[q] * std::pow(r, -1.0 - 2.0 * s);
      raw += wq[q];
    }
    const double fix = kernel_mass(a, b, s) / raw;
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      const double r = mid + half * rule.x[q];
      row.add_stencil(g.interpolate(x + r * dir), wq[q] * fix, ghost);
    }
    a = b;
  }
}

// int_{r_start}^inf g(x + r dir) r^{-1-2s} dr for piecewise-constant exterior data.
double ray_exterior_integral(const ExteriorSpec& ext, const Point& q, const Point& dir,
                             double r_start, double s, std::vector<double>& roots) {
  roots.clear();
  const double b = dot(q, dir);
  const double qq = dot(q, q);
  for (double R : ext.radii()) {
    const double disc = b * b - (qq - R * R);
    if (disc < 0.0) continue;
    const double sq = std::sqrt(disc);
    for (double t : {-b - sq, -b + sq})
      if (t > r_start) roots.push_back(t);
  }
  std::sort(roots.begin(), roots.end());
  auto rho = [&](double r) { return norm(q + r * dir); };
  double total = 0.0;
  double a = r_start;
  for (double t : roots) {
    if (t <= a) continue;
    total += ext.value_at_radius(rho(0.5 * (a + t))) * kernel_mass(a, t, s);
    a = t;
  }
  total += ext.value_at_radius(rho(2.0 * a + 1.0)) * kernel_mass(a, INFINITY, s);
  return total;
}

Point snap(Point p) {
  for (double& v : p)
    if (std::abs(v) < 1e-15) v = 0.0;
  return p;
}

}  // namespace

std::string_view to_string(Extremal sign) { return sign == Extremal::plus ? "plus" : "minus"; }

Extremal extremal_from_string(std::string_view name) {
  if (name == "plus") return Extremal::plus;
  if (name == "minus") return Extremal::minus;
  throw InvalidArgument("unknown extremal sign '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// KernelSpec

KernelSpec KernelSpec::make(int dim, double s, double lambda, double Lambda, double c_norm,
                            int n_dirs) {
  KernelSpec k;
  k.s = s;
  k.lambda = lambda;
  k.Lambda = Lambda;
  k.c_norm = c_norm;
  if (dim == 1) {
    k.directions.push_back({{1.0, 0.0}, 1.0});
  } else if (dim == 2) {
    if (n_dirs < 1) throw InvalidArgument("n_dirs must be positive");
    const double w = std::numbers::pi / n_dirs;
    for (int j = 0; j < n_dirs; ++j) {
      const double t = w * j;
      k.directions.push_back({snap({std::cos(t), std::sin(t)}), w});
    }
  } else {
    throw InvalidArgument("dim must be 1 or 2");
  }
  k.validate();
  return k;
}

void KernelSpec::validate() const {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("s must lie in (0, 1)");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (!(Lambda >= lambda) || !std::isfinite(Lambda))
    throw InvalidArgument("Lambda must be finite and at least lambda");
  if (!(c_norm > 0.0) || !std::isfinite(c_norm)) throw InvalidArgument("c_norm must be positive");
  if (directions.empty()) throw InvalidArgument("direction list is empty");
  for (const Direction& d : directions) {
    if (!(d.weight > 0.0)) throw InvalidArgument("direction weights must be positive");
    if (std::abs(norm(d.theta) - 1.0) > 1e-12) throw InvalidArgument("directions must be unit");
  }
  if (!(near_factor > 0.0)) throw InvalidArgument("near_factor must be positive");
  gauss_rule(radial_points);
}

double fractional_laplacian_constant(int dim, double s) {
  const double n = dim;
  return s * std::pow(4.0, s) * std::tgamma(0.5 * n + s) /
         (std::pow(std::numbers::pi, 0.5 * n) * std::tgamma(1.0 - s));
}

NormalizationPreset normalization_preset_from_string(std::string_view name) {
  if (name == "unit") return NormalizationPreset::unit;
  if (name == "one_minus_s") return NormalizationPreset::one_minus_s;
  if (name == "fractional_laplacian") return NormalizationPreset::fractional_laplacian;
  throw InvalidArgument("unknown normalization preset '" + std::string(name) + "'");
}

double normalization(NormalizationPreset preset, int dim, double s) {
  switch (preset) {
    case NormalizationPreset::unit: return 1.0;
    case NormalizationPreset::one_minus_s: return 1.0 - s;
    case NormalizationPreset::fractional_laplacian: return fractional_laplacian_constant(dim, s);
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// PolicyField

PolicyField::PolicyField(std::size_t nodes, std::size_t directions, double value)
    : mu_(Eigen::MatrixXd::Constant(static_cast<Index>(nodes), static_cast<Index>(directions),
                                    value)) {}

void PolicyField::validate(const KernelSpec& kernel) const {
  if (directions() != kernel.directions.size())
    throw InvalidArgument("policy has the wrong number of directions");
  for (Index i = 0; i < mu_.rows(); ++i)
    for (Index j = 0; j < mu_.cols(); ++j) {
      const double m = mu_(i, j);
      if (!(m >= kernel.lambda && m <= kernel.Lambda))
        throw InvalidArgument("policy weight " + std::to_string(m) + " at node " +
                              std::to_string(i) + " leaves [lambda, Lambda]");
    }
}

// ---------------------------------------------------------------------------
// NonlocalOperator

NonlocalOperator::NonlocalOperator(GridPtr grid, KernelSpec kernel)
    : grid_(std::move(grid)), kernel_(std::move(kernel)) {
  if (!grid_) throw InvalidArgument("operator needs a grid");
  kernel_.validate();
  const DomainGrid& g = *grid_;
  if (g.dim() == 1 && kernel_.directions.size() != 1)
    throw InvalidArgument("a one-dimensional kernel has exactly one direction");

  const std::size_t n = g.size();
  const std::size_t m = kernel_.directions.size();
  const double s = kernel_.s;
  const double r0 = kernel_.near_factor * g.h();
  const double near_mass = std::pow(r0, -2.0 * s) / (2.0 - 2.0 * s);
  const double far_mass = std::pow(r0, -2.0 * s) / (2.0 * s);
  const GaussRule rule = gauss_rule(kernel_.radial_points);

  dense_ = g.dim() == 1;
  hooks_.assign(m, std::vector<Hook>(n));
  diagonal_.assign(m * n, 0.0);
  if (dense_)
    dense_rows_.assign(m, Eigen::MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(n)));
  else
    sparse_rows_.assign(m, Eigen::SparseMatrix<double, Eigen::RowMajor>(static_cast<Index>(n),
                                                                        static_cast<Index>(n)));

  RowAccumulator row(n);
  std::vector<double> breaks;
  for (std::size_t j = 0; j < m; ++j) {
    const Point theta = kernel_.directions[j].theta;
    auto* sparse = dense_ ? nullptr : &sparse_rows_[j];
    if (sparse) sparse->reserve(static_cast<Index>(n * 64));
    for (std::size_t i = 0; i < n; ++i) {
      const Point& x = g.node(i);
      Hook& hook = hooks_[j][i];
      row.add(static_cast<int>(i), -2.0 * (near_mass + far_mass));
      for (int side = 0; side < 2; ++side) {
        const Point dir = side == 0 ? theta : -1.0 * theta;
        const double r_exit = g.exit_distance(x, dir);
        const Point p = x + r0 * dir;
        if (r0 < r_exit && g.contains(p)) {
          row.add_stencil(g.interpolate(p), near_mass, hook.ghost);
        } else {
          hook.near_radius[side] = norm(p - g.center());
          hook.near_weight[side] = near_mass;
        }
        if (r_exit > r0)
          accumulate_ray(g, x, dir, r0, r_exit, s, rule, row, hook.ghost, breaks);
        hook.tail_start[side] = std::max(r0, r_exit);
      }
      if (dense_) {
        auto& A = dense_rows_[j];
        row.drain([&](int col, double v) { A(static_cast<Index>(i), col) = v; });
      } else {
        sparse->startVec(static_cast<Index>(i));
        row.drain([&](int col, double v) { sparse->insertBack(static_cast<Index>(i), col) = v; });
      }
      diagonal_[j * n + i] = dense_ ? dense_rows_[j](static_cast<Index>(i), static_cast<Index>(i))
                                    : sparse->coeff(static_cast<Index>(i), static_cast<Index>(i));
    }
    if (sparse) {
      sparse->finalize();
      sparse->makeCompressed();
    }
  }
}

double NonlocalOperator::hook_value(const ExteriorSpec& exterior, std::size_t node,
                                    std::size_t dir) const {
  const Hook& hook = hooks_[dir][node];
  const Point q = grid_->node(node) - grid_->center();
  const Point theta = kernel_.directions[dir].theta;
  std::vector<double> roots;
  double b = hook.ghost * exterior.trace_value();
  for (int side = 0; side < 2; ++side) {
    const Point d = side == 0 ? theta : -1.0 * theta;
    if (hook.near_weight[side] != 0.0)
      b += hook.near_weight[side] * exterior.value_at_radius(hook.near_radius[side]);
    b += ray_exterior_integral(exterior, q, d, hook.tail_start[side], kernel_.s, roots);
  }
  return b;
}

double NonlocalOperator::exterior_term(const ExteriorSpec& exterior, std::size_t node,
                                       std::size_t dir) const {
  if (exterior.tail_growth() && !(exterior.tail_growth()->alpha < 2.0 * kernel_.s))
    throw NonFiniteResult("exterior tail growth alpha must be below 2s for the tail to converge");
  const double b = hook_value(exterior, node, dir);
  if (!std::isfinite(b)) throw NodeError(node, "non-finite exterior integral");
  return b;
}

ExteriorTerms NonlocalOperator::exterior_terms(const ExteriorSpec& exterior) const {
  if (exterior.tail_growth() && !(exterior.tail_growth()->alpha < 2.0 * kernel_.s))
    throw NonFiniteResult("exterior tail growth alpha must be below 2s for the tail to converge");
  const std::size_t n = size();
  ExteriorTerms out;
  out.per_direction.assign(num_directions(), Eigen::VectorXd(static_cast<Index>(n)));
  for (std::size_t j = 0; j < num_directions(); ++j)
    for (std::size_t i = 0; i < n; ++i) {
      const double b = hook_value(exterior, i, j);
      if (!std::isfinite(b)) throw NodeError(i, "non-finite exterior integral");
      out.per_direction[j][static_cast<Index>(i)] = b;
    }
  return out;
}

Eigen::VectorXd NonlocalOperator::apply_direction(std::size_t dir, const Eigen::VectorXd& u) const {
  if (dense_) return dense_rows_[dir] * u;
  return sparse_rows_[dir] * u;
}

double NonlocalOperator::row_dot(std::size_t dir, std::size_t node, const Eigen::VectorXd& u) const {
  const auto i = static_cast<Index>(node);
  if (dense_) return dense_rows_[dir].row(i).dot(u);
  return sparse_rows_[dir].row(i).dot(u);
}

Eigen::MatrixXd NonlocalOperator::directional_integrals(const Eigen::VectorXd& u,
                                                        const ExteriorTerms& b) const {
  if (static_cast<std::size_t>(u.size()) != size())
    throw InvalidArgument("value vector does not match the grid");
  if (b.per_direction.size() != num_directions())
    throw InvalidArgument("exterior terms do not match the kernel");
  Eigen::MatrixXd out(u.size(), static_cast<Index>(num_directions()));
  if (dense_ && num_directions() == 1) {
    out.col(0).noalias() = dense_rows_[0] * u;
    out.col(0) += b.per_direction[0];
    return out;
  }
  for (std::size_t j = 0; j < num_directions(); ++j)
    out.col(static_cast<Index>(j)) = apply_direction(j, u) + b.per_direction[j];
  return out;
}

double NonlocalOperator::directional_integral(const Eigen::VectorXd& u, const ExteriorSpec& exterior,
                                              std::size_t node, std::size_t dir) const {
  if (node >= size()) throw InvalidArgument("node index out of range");
  if (dir >= num_directions()) throw InvalidArgument("direction index out of range");
  return row_dot(dir, node, u) + exterior_term(exterior, node, dir);
}

Eigen::MatrixXd NonlocalOperator::linear_matrix(const PolicyField& mu) const {
  const auto n = static_cast<Index>(size());
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t j = 0; j < num_directions(); ++j) {
    const double cw = kernel_.c_norm * kernel_.directions[j].weight;
    const auto col = static_cast<Index>(j);
    if (dense_) {
      L.noalias() += (cw * mu.matrix().col(col)).asDiagonal() * dense_rows_[j];
    } else {
      const auto& A = sparse_rows_[j];
      for (Index i = 0; i < A.outerSize(); ++i) {
        const double f = cw * mu.matrix()(i, col);
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, i); it; ++it)
          L(i, it.col()) += f * it.value();
      }
    }
  }
  return L;
}

Eigen::VectorXd NonlocalOperator::linear_offset(const PolicyField& mu, const ExteriorTerms& b) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Index>(size()));
  for (std::size_t j = 0; j < num_directions(); ++j)
    out += kernel_.c_norm * kernel_.directions[j].weight *
           mu.matrix().col(static_cast<Index>(j)).cwiseProduct(b.per_direction[j]);
  return out;
}

double NonlocalOperator::diagonal_bound() const {
  const std::size_t n = size();
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < num_directions(); ++j)
      sum += kernel_.directions[j].weight * std::abs(diagonal_[j * n + i]);
    best = std::max(best, sum);
  }
  return kernel_.c_norm * kernel_.Lambda * best;
}

Eigen::MatrixXd NonlocalOperator::direction_matrix(std::size_t dir) const {
  if (dir >= num_directions()) throw InvalidArgument("direction index out of range");
  if (dense_) return dense_rows_[dir];
  return Eigen::MatrixXd(sparse_rows_[dir]);
}

// ---------------------------------------------------------------------------
// Free functions

namespace {

void require_same_grid(const NonlocalOperator& op, const Field& f) {
  if (f.grid_ptr() != op.grid_ptr() && f.grid_ptr()->nodes().data() != op.grid().nodes().data())
    throw InvalidArgument("field and operator live on different grids");
}

double extremal_term(const KernelSpec& k, double I, Extremal sign) {
  const double pos = std::max(I, 0.0);
  const double neg = std::min(I, 0.0);
  return sign == Extremal::plus ? k.Lambda * pos + k.lambda * neg : k.lambda * pos + k.Lambda * neg;
}

double optimal_weight(const KernelSpec& k, double I, Extremal sign) {
  if (sign == Extremal::plus) return I > 0.0 ? k.Lambda : k.lambda;
  return I < 0.0 ? k.Lambda : k.lambda;
}

}  // namespace

double exterior_ray_integral(const ExteriorSpec& exterior, const Point& offset, const Point& dir,
                             double r_start, double s) {
  std::vector<double> roots;
  return ray_exterior_integral(exterior, offset, dir, r_start, s, roots);
}

double second_difference(const Field& f, const Point& x, const Point& y) {
  return eval_anywhere(f, x + y) + eval_anywhere(f, x - y) - 2.0 * eval_anywhere(f, x);
}

double directional_integral(const NonlocalOperator& op, const Field& f, std::size_t node,
                            std::size_t dir) {
  require_same_grid(op, f);
  return op.directional_integral(f.values(), f.exterior(), node, dir);
}

double eval_extremal(const NonlocalOperator& op, const Field& f, std::size_t node, Extremal sign) {
  require_same_grid(op, f);
  const KernelSpec& k = op.kernel();
  double sum = 0.0;
  for (std::size_t j = 0; j < op.num_directions(); ++j) {
    const double I = op.directional_integral(f.values(), f.exterior(), node, j);
    sum += k.directions[j].weight * extremal_term(k, I, sign);
  }
  const double v = k.c_norm * sum;
  if (!std::isfinite(v)) throw NodeError(node, "non-finite operator value");
  return v;
}

double eval_linear(const NonlocalOperator& op, const Field& f, std::size_t node,
                   const PolicyField& mu) {
  require_same_grid(op, f);
  const KernelSpec& k = op.kernel();
  if (mu.nodes() != op.size()) throw InvalidArgument("policy does not match the grid");
  if (mu.directions() != op.num_directions())
    throw InvalidArgument("policy has the wrong number of directions");
  double sum = 0.0;
  for (std::size_t j = 0; j < op.num_directions(); ++j) {
    const double m = mu(node, j);
    if (!(m >= k.lambda && m <= k.Lambda))
      throw InvalidArgument("policy weight at node " + std::to_string(node) +
                            " leaves [lambda, Lambda]");
    sum += k.directions[j].weight * m * op.directional_integral(f.values(), f.exterior(), node, j);
  }
  return k.c_norm * sum;
}

PolicyField optimal_policy(const NonlocalOperator& op, const Field& f, Extremal sign) {
  require_same_grid(op, f);
  return policy_from_integrals(op.kernel(),
                               op.directional_integrals(f.values(), op.exterior_terms(f.exterior())),
                               sign);
}

Eigen::VectorXd operator_apply(const NonlocalOperator& op, const Field& f, Extremal sign) {
  require_same_grid(op, f);
  Eigen::VectorXd out = extremal_from_integrals(
      op.kernel(), op.directional_integrals(f.values(), op.exterior_terms(f.exterior())), sign);
  for (Index i = 0; i < out.size(); ++i)
    if (!std::isfinite(out[i]))
      throw NodeError(static_cast<std::size_t>(i), "non-finite operator value");
  return out;
}

Eigen::VectorXd extremal_from_integrals(const KernelSpec& kernel, const Eigen::MatrixXd& integrals,
                                        Extremal sign) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(integrals.rows());
  for (Index j = 0; j < integrals.cols(); ++j) {
    const double w = kernel.directions[static_cast<std::size_t>(j)].weight;
    for (Index i = 0; i < integrals.rows(); ++i)
      out[i] += w * extremal_term(kernel, integrals(i, j), sign);
  }
  return kernel.c_norm * out;
}

PolicyField policy_from_integrals(const KernelSpec& kernel, const Eigen::MatrixXd& integrals,
                                  Extremal sign) {
  PolicyField mu(static_cast<std::size_t>(integrals.rows()),
                 static_cast<std::size_t>(integrals.cols()), kernel.lambda);
  for (Index i = 0; i < integrals.rows(); ++i)
    for (Index j = 0; j < integrals.cols(); ++j)
      mu(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
          optimal_weight(kernel, integrals(i, j), sign);
  return mu;
}

Eigen::VectorXd linear_from_integrals(const KernelSpec& kernel, const Eigen::MatrixXd& integrals,
                                      const PolicyField& mu) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(integrals.rows());
  for (Index j = 0; j < integrals.cols(); ++j)
    out += kernel.directions[static_cast<std::size_t>(j)].weight *
           mu.matrix().col(j).cwiseProduct(integrals.col(j));
  return kernel.c_norm * out;
}

}  // namespace pucci

// SPDX-License-Identifier: Apache-2.0
#include "pucci/barriers_norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "pucci/errors.hpp"

namespace pucci {

namespace {

using Index = Eigen::Index;

// Samples whose slack is above -kSlackTolerance * max(1, |rhs|) count as holding.
constexpr double kSlackTolerance = 1e-12;
constexpr int kAngularSamples = 512;

double weight(const Point& x, int dim, double s) {
  return 1.0 / (1.0 + std::pow(norm(x), dim + 2.0 * s));
}

template <class F>
double gauss10(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
}

template <class F>
double adaptive(F&& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13);
}

double interior_value(const DomainGrid& g, const Field& f, const Point& p) {
  const InterpStencil st = g.interpolate(p);
  double v = st.ghost * f.exterior().trace_value();
  for (int k = 0; k < st.count; ++k) v += st.weight[k] * f.values()[st.node[k]];
  return v;
}

double interior_norm_1d(const Field& f, double s) {
  const DomainGrid& g = f.grid();
  const double c = g.center()[0];
  const double L = g.extent().half_x;
  const double trace = f.exterior().trace_value();
  std::vector<double> xs{c - L};
  std::vector<double> vs{trace};
  for (std::size_t i = 0; i < g.size(); ++i) {
    xs.push_back(g.node(i)[0]);
    vs.push_back(f.values()[static_cast<Index>(i)]);
  }
  xs.push_back(c + L);
  vs.push_back(trace);

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double xa = xs[k], xb = xs[k + 1], va = vs[k], vb = vs[k + 1];
    auto piece = [&](double a, double b) {
      return gauss10(
          [&](double x) {
            const double v = va + (vb - va) * (x - xa) / (xb - xa);
            return std::abs(v) * weight({x, 0.0}, 1, s);
          },
          a, b);
    };
    if (va * vb < 0.0) {
      const double root = xa + (xb - xa) * va / (va - vb);
      total += piece(xa, root) + piece(root, xb);
    } else {
      total += piece(xa, xb);
    }
  }
  return total;
}

double interior_norm_2d(const Field& f, double s) {
  const DomainGrid& g = f.grid();
  using Rule = boost::math::quadrature::gauss<double, 5>;
  std::vector<double> gx, gw;
  for (std::size_t k = 0; k < Rule::abscissa().size(); ++k) {
    const double a = Rule::abscissa()[k], w = Rule::weights()[k];
    gx.push_back(a);
    gw.push_back(w);
    if (a != 0.0) {
      gx.push_back(-a);
      gw.push_back(w);
    }
  }
  const double h = g.h();
  const Point c = g.center();
  const double half[2] = {g.extent().half_x, g.kind() == DomainKind::box ? g.extent().half_y
                                                                          : g.extent().half_x};
  const int ri = static_cast<int>(std::ceil(half[0] / h)) + 1;
  const int rj = static_cast<int>(std::ceil(half[1] / h)) + 1;
  double total = 0.0;
  for (int j = -rj; j < rj; ++j)
    for (int i = -ri; i < ri; ++i) {
      const Point corner{c[0] + h * i, c[1] + h * j};
      for (std::size_t a = 0; a < gx.size(); ++a)
        for (std::size_t b = 0; b < gx.size(); ++b) {
          const Point p{corner[0] + 0.5 * h * (1.0 + gx[a]), corner[1] + 0.5 * h * (1.0 + gx[b])};
          if (!g.contains(p)) continue;
          total += 0.25 * h * h * gw[a] * gw[b] * std::abs(interior_value(g, f, p)) *
                   weight(p, 2, s);
        }
    }
  return total;
}

// int_{rho_start}^inf |g(rho)| w(c + rho e) rho^{dim-1} d rho along one ray from the center.
double exterior_ray(const ExteriorSpec& ext, const Point& c, const Point& e, double rho_start,
                    int dim, double s) {
  std::vector<double> breaks{rho_start};
  for (double R : ext.radii())
    if (R > rho_start) breaks.push_back(R);
  breaks.push_back(std::numeric_limits<double>::infinity());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double a = breaks[k], b = breaks[k + 1];
    const double value = std::isinf(b) ? ext.far_value() : ext.value_at_radius(0.5 * (a + b));
    if (value == 0.0 || b <= a) continue;
    const auto density = [&](double rho) {
      return weight(c + rho * e, dim, s) * (dim == 2 ? rho : 1.0);
    };
    // Far piece: rho = a t^{-1/(2s)} maps the rho^{-1-2s} decay to a bounded
    // integrand on (0, 1].
    const double mass =
        std::isinf(b) ? adaptive(
                            [&](double t) {
                              const double rho = a * std::pow(t, -1.0 / (2.0 * s));
                              return density(rho) * rho / (2.0 * s * t);
                            },
                            0.0, 1.0)
                      : adaptive(density, a, b);
    total += std::abs(value) * mass;
  }
  return total;
}

}  // namespace

double l1s_norm_exterior(const DomainGrid& grid, const ExteriorSpec& exterior, double s) {
  const Point c = grid.center();
  if (grid.dim() == 1) {
    double total = 0.0;
    for (double sign : {-1.0, 1.0}) {
      const Point e{sign, 0.0};
      total += exterior_ray(exterior, c, e, grid.exit_distance(c, e), 1, s);
    }
    return total;
  }
  double total = 0.0;
  const double dphi = 2.0 * std::numbers::pi / kAngularSamples;
  for (int k = 0; k < kAngularSamples; ++k) {
    const Point e{std::cos(dphi * k), std::sin(dphi * k)};
    total += exterior_ray(exterior, c, e, grid.exit_distance(c, e), 2, s);
  }
  return total * dphi;
}

double l1s_norm(const Field& f, double s) {
  const DomainGrid& g = f.grid();
  const double inner = g.dim() == 1 ? interior_norm_1d(f, s) : interior_norm_2d(f, s);
  return inner + l1s_norm_exterior(g, f.exterior(), s);
}

double rho1(const Point& x, double s) { return std::pow(std::max(1.0 - norm(x), 0.0), s); }

double rho2(const Point& x, double s) {
  return std::pow(std::max(1.0 - norm(x), 0.0), 1.5 * s);
}

// ---------------------------------------------------------------------------
// BarrierReport

void BarrierReport::set_parameter(const std::string& key, double value) {
  for (auto& [k, v] : parameters_)
    if (k == key) {
      v = value;
      return;
    }
  parameters_.emplace_back(key, value);
}

double BarrierReport::parameter(const std::string& key) const {
  for (const auto& [k, v] : parameters_)
    if (k == key) return v;
  throw InvalidArgument("report has no parameter '" + key + "'");
}

void BarrierReport::append(std::string line, const Point& point, double lhs, double rhs) {
  margins_.push_back({std::move(line), point, lhs, rhs, lhs - rhs});
}

double BarrierReport::min_slack(const std::string& line) const {
  double best = std::numeric_limits<double>::infinity();
  for (const Margin& m : margins_)
    if (m.line == line) best = std::min(best, m.slack);
  return best;
}

std::size_t BarrierReport::violations(const std::string& line) const {
  std::size_t count = 0;
  for (const Margin& m : margins_)
    if (m.line == line && m.slack < -kSlackTolerance * std::max(1.0, std::abs(m.rhs))) ++count;
  return count;
}

std::string BarrierReport::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name_;
  j["parameters"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : parameters_) j["parameters"][k] = v;
  j["margins"] = nlohmann::ordered_json::array();
  for (const Margin& m : margins_)
    j["margins"].push_back({{"line", m.line},
                            {"point", {m.point[0], m.point[1]}},
                            {"lhs", m.lhs},
                            {"rhs", m.rhs},
                            {"slack", m.slack}});
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Barriers

PhiBarrier::PhiBarrier(double s, int N, double C_growth) : s_(s), N_(N), C_growth_(C_growth) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("s must lie in (0, 1)");
  if (N < 1) throw InvalidArgument("N must be at least 1");
  if (!(C_growth > 1.0)) throw InvalidArgument("C_growth must exceed 1");
  c_ = 1.0 / (2.0 * std::pow(C_growth, N));
}

double PhiBarrier::operator()(const Point& y) const {
  double best = 0.0;
  for (int k = 0; k <= N_; ++k) {
    const Point z = std::pow(2.0, static_cast<double>(k) / N_) * y;
    best = std::max(best, std::pow(C_growth_, k) * (rho1(z, s_) + rho2(z, s_)));
  }
  return c_ * best;
}

PhiResult build_phi(const NonlocalOperator& op, double vminus_sup, int N, double C_growth) {
  const DomainGrid& g = op.grid();
  const bool unit_ball = (g.kind() == DomainKind::interval || g.kind() == DomainKind::disk) &&
                         g.extent().half_x == 1.0 && g.center() == Point{0.0, 0.0};
  if (!unit_ball) throw InvalidArgument("build_phi needs the unit ball centered at the origin");
  if (!(vminus_sup >= 0.0)) throw InvalidArgument("sup of V^- must be nonnegative");
  const double s = op.kernel().s;
  PhiBarrier barrier(s, N, C_growth);
  const double c = barrier.c();
  const ExteriorSpec zero = ExteriorSpec::constant(0.0);
  Field field = Field::sample(op.grid_ptr(), barrier, zero);

  BarrierReport report("phi");
  report.set_parameter("s", s);
  report.set_parameter("c", c);
  report.set_parameter("C_growth", C_growth);
  report.set_parameter("N", N);
  report.set_parameter("vminus_sup", vminus_sup);

  const Eigen::VectorXd M = operator_apply(op, field, Extremal::minus);
  const Field f1 = Field::sample(op.grid_ptr(), [&](const Point& x) { return rho1(x, s); }, zero);
  const Field f2 = Field::sample(op.grid_ptr(), [&](const Point& x) { return rho2(x, s); }, zero);
  const Eigen::VectorXd M1 = operator_apply(op, f1, Extremal::minus);
  const Eigen::VectorXd M2 = operator_apply(op, f2, Extremal::minus);

  double rho1_max = -std::numeric_limits<double>::infinity();
  double C_rho1 = 0.0;
  double outer_radius = -1.0;
  double outer_coefficient = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Point& x = g.node(i);
    const double r = norm(x);
    const double phi = field.values()[static_cast<Index>(i)];
    report.append("lower_bound", x, phi, c * std::pow(1.0 - r, s));
    if (r <= 0.5) report.append("upper_bound", x, 1.0, phi);
    if (r < 0.5) continue;
    const auto k = static_cast<Index>(i);
    report.append("subsolution", x, M[k] - vminus_sup * phi, c);
    rho1_max = std::max(rho1_max, M1[k]);
    C_rho1 = std::max(C_rho1, -M1[k] / (1.0 + (1.0 - s) * std::abs(std::log(1.0 - r))));
    if (r > outer_radius) {
      outer_radius = r;
      outer_coefficient = M2[k] * std::pow(1.0 - r, 0.5 * s);
    }
  }
  for (double radius : {1.0, 1.25, 1.5, 2.0, 3.0})
    for (int side = 0; side < (g.dim() == 1 ? 2 : 4); ++side) {
      const double t = 0.5 * std::numbers::pi * side;
      const Point p = g.dim() == 1 ? Point{side == 0 ? radius : -radius, 0.0}
                                   : Point{radius * std::cos(t), radius * std::sin(t)};
      report.append("exterior_zero", p, -std::abs(eval_anywhere(field, p)), 0.0);
    }

  // Measured barrier constants: c from the boundary asymptotics of M^-[rho2],
  // halved; C the smallest value making both barrier inequalities hold on the samples.
  const double c_barrier = 0.5 * outer_coefficient;
  double C_barrier = C_rho1;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = norm(g.node(i));
    if (r < 0.5) continue;
    C_barrier = std::max(C_barrier, c_barrier * std::pow(1.0 - r, -0.5 * s) - M2[static_cast<Index>(i)]);
  }
  report.set_parameter("rho1_operator_max", rho1_max);
  report.set_parameter("barrier_c", c_barrier);
  report.set_parameter("barrier_C", C_barrier);
  if (c_barrier > 0.0) {
    const double C1 = (1.0 + 2.0 * C_barrier + 2.0 * vminus_sup) / c_barrier;
    const double C2 = (1.0 - s) * C_barrier / c_barrier;
    report.set_parameter("epsilon", 0.5 * std::pow(C1 + C2 * std::log(2.0), -2.0 / s));
  } else {
    report.set_parameter("epsilon", std::numeric_limits<double>::quiet_NaN());
  }
  return {barrier, std::move(field), std::move(report)};
}

PsiResult psi_r(const PhiBarrier& phi, const GridPtr& grid, const Point& x_r, double r,
                double alpha_r) {
  if (!grid) throw InvalidArgument("psi_r needs a grid");
  if (!(r > 0.0)) throw InvalidArgument("radius must be positive");
  if (!(alpha_r >= 0.0)) throw InvalidArgument("alpha_r must be nonnegative");
  if (!grid->contains(x_r) || grid->boundary_distance(x_r) < r * (1.0 - 1e-12))
    throw InvalidArgument("ball B_r(x_r) is not contained in the domain");
  const double s = phi.s();
  Field field = Field::sample(
      grid, [&](const Point& x) { return alpha_r * phi((1.0 / r) * (x - x_r)); },
      ExteriorSpec::constant(0.0));
  BarrierReport report("psi_r");
  report.set_parameter("s", s);
  report.set_parameter("c", phi.c());
  report.set_parameter("r", r);
  report.set_parameter("alpha_r", alpha_r);
  report.set_parameter("x_r0", x_r[0]);
  report.set_parameter("x_r1", x_r[1]);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const Point& x = grid->node(i);
    const double d = norm(x - x_r);
    if (d >= r) continue;
    report.append("lower_bound", x, field.values()[static_cast<Index>(i)],
                  phi.c() * alpha_r * std::pow(r, -s) * std::pow(r - d, s));
  }
  return {std::move(field), std::move(report)};
}

double negpart_bound_constant(double d0, double s, int dim, double Lambda) {
  if (!(d0 > 0.0)) throw InvalidArgument("d0 must be positive");
  const double p = dim + 2.0 * s;
  return (1.0 - s) * (std::pow(d0, -p) + std::pow(2.0, p)) * Lambda;
}

HopfCheck hopf_condition_check(double C_tilde, double norm_uminus, double alpha_r, double r,
                               double s, double c_barrier) {
  if (!(r > 0.0)) throw InvalidArgument("radius must be positive");
  if (!(alpha_r >= 0.0)) throw InvalidArgument("alpha_r must be nonnegative");
  const double lhs = C_tilde * norm_uminus;
  const double rhs = alpha_r / std::pow(r, 2.0 * s) * c_barrier;
  return {lhs < rhs, rhs - lhs};
}

}  // namespace pucci

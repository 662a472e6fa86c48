// SPDX-License-Identifier: Apache-2.0
#include "pucci/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "pucci/barriers_norms.hpp"
#include "pucci/errors.hpp"

namespace pucci {

namespace {

using Index = Eigen::Index;

constexpr double kInf = std::numeric_limits<double>::infinity();
// Angular resolution of exterior integrals in two dimensions.
constexpr int kTailAngles = 720;
// Growth fits: window radius in units of h, minimum samples, crossing candidates.
constexpr double kFitWindow = 8.0;
constexpr std::size_t kFitMinSamples = 4;
constexpr int kFitCandidates = 200;

double at(const Eigen::VectorXd& v, std::size_t i) { return v[static_cast<Index>(i)]; }

std::vector<std::string> segment_names(const DomainGrid& grid) {
  if (grid.dim() == 1) return {"left", "right"};
  if (grid.kind() == DomainKind::box) return {"left", "right", "bottom", "top"};
  std::vector<std::string> out;
  for (int k = 0; k < 8; ++k) out.push_back("sector_" + std::to_string(k));
  return out;
}

std::size_t segment_of(const DomainGrid& grid, const Point& x) {
  const Point rel = x - grid.center();
  if (grid.dim() == 1) return rel[0] < 0.0 ? 0 : 1;
  if (grid.kind() == DomainKind::box) {
    const Extent& e = grid.extent();
    const double side[4] = {rel[0] + e.half_x, e.half_x - rel[0], rel[1] + e.half_y,
                            e.half_y - rel[1]};
    return static_cast<std::size_t>(std::min_element(side, side + 4) - side);
  }
  double angle = std::atan2(rel[1], rel[0]);
  if (angle < 0.0) angle += 2.0 * std::numbers::pi;
  const auto k = static_cast<std::size_t>(angle / (std::numbers::pi / 4.0));
  return std::min<std::size_t>(k, 7);
}

struct LineFit {
  double slope;
  double ssr;
};

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - my - slope * (xs[i] - mx);
    ssr += r * r;
  }
  return {slope, ssr};
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::strictly_positive: return "strictly_positive";
    case Verdict::dead_core: return "dead_core";
    case Verdict::trivial: return "trivial";
  }
  return "unknown";
}

SmpReport smp_check(const Field& u, double s, double tol_zero, double probe_depth) {
  const DomainGrid& grid = u.grid();
  const Eigen::VectorXd& v = u.values();
  SmpReport out;
  const std::vector<std::string> names = segment_names(grid);
  for (const std::string& name : names) out.hopf.push_back({name, kInf, 0});
  bool trivial = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double value = at(v, i);
    if (value <= tol_zero) out.dead_core.push_back(i);
    if (std::abs(value) > tol_zero) trivial = false;
    const double d = grid.distance(i);
    if (d <= probe_depth) {
      HopfSegment& seg = out.hopf[segment_of(grid, grid.node(i))];
      seg.min_quotient = std::min(seg.min_quotient, value / std::pow(d, s));
      ++seg.samples;
    }
  }
  out.hopf_min = kInf;
  for (const HopfSegment& seg : out.hopf) out.hopf_min = std::min(out.hopf_min, seg.min_quotient);
  if (trivial)
    out.verdict = Verdict::trivial;
  else if (out.dead_core.empty())
    out.verdict = Verdict::strictly_positive;
  else
    out.verdict = Verdict::dead_core;
  return out;
}

LocalizationCheck max_localization_check(const Field& u, const Eigen::VectorXd& a) {
  if (a.size() != u.values().size()) throw InvalidArgument("weight size does not match the grid");
  const double top = u.max();
  LocalizationCheck out{true, {}};
  for (std::size_t i = 0; i < u.grid().size(); ++i) {
    if (at(u.values(), i) != top) continue;
    out.argmax.push_back(i);
    if (!(at(a, i) > 0.0)) out.pass = false;
  }
  return out;
}

double tail_constant(int dim, double s, double R) {
  if (!(R > 0.0)) throw InvalidArgument("tail radius must be positive");
  const double sphere = dim == 1 ? 2.0 : 2.0 * std::numbers::pi;
  return sphere * std::pow(R, -2.0 * s) / (2.0 * s);
}

double enclosing_radius(const DomainGrid& grid, const Point& x0) {
  const Extent& e = grid.extent();
  const double offset = norm(x0 - grid.center());
  if (grid.kind() != DomainKind::box) return e.half_x + offset;
  double out = 0.0;
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0})
      out = std::max(out, norm(grid.center() + Point{sx * e.half_x, sy * e.half_y} - x0));
  return out;
}

WeightBound weight_bound_check(const Field& u, const Eigen::VectorXd& a, double q,
                               const KernelSpec& kernel, double R, double ellipticity_factor) {
  if (a.size() != u.values().size()) throw InvalidArgument("weight size does not match the grid");
  const DomainGrid& grid = u.grid();
  Index best = 0;
  u.values().maxCoeff(&best);
  const auto node = static_cast<std::size_t>(best);
  WeightBound out{};
  out.node = node;
  out.R = R > 0.0 ? R : enclosing_radius(grid, grid.node(node));
  out.C_n = tail_constant(grid.dim(), kernel.s, out.R);
  const double grow = std::pow(std::max(u.values()[best], 0.0), 1.0 - q);
  const auto margin = [&](double factor) {
    return a[best] - kernel.c_norm * factor * out.C_n * grow;
  };
  out.margin = margin(ellipticity_factor);
  out.margin_lambda = margin(kernel.lambda);
  out.margin_Lambda = margin(kernel.Lambda);
  return out;
}

double exterior_tail_check(const Field& u, std::size_t node, double s) {
  const DomainGrid& grid = u.grid();
  if (node >= grid.size()) throw InvalidArgument("node index out of range");
  const Point& x0 = grid.node(node);
  const Point offset = x0 - grid.center();
  const auto ray = [&](const Point& dir) {
    return exterior_ray_integral(u.exterior(), offset, dir, grid.exit_distance(x0, dir), s);
  };
  if (grid.dim() == 1) return ray({1.0, 0.0}) + ray({-1.0, 0.0});
  double sum = 0.0;
  for (int k = 0; k < kTailAngles; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / kTailAngles;
    sum += ray({std::cos(angle), std::sin(angle)});
  }
  return sum * 2.0 * std::numbers::pi / kTailAngles;
}

ExteriorSpec threshold_exterior(const DomainGrid& grid, double M) {
  const double R = grid.inradius();
  return ExteriorSpec({{R, 2.0 * R, 0.0}, {2.0 * R, 3.0 * R, 1.0 - M}}, 1.0);
}

ExteriorSpec sweep_exterior(const DomainGrid& grid, double amplitude) {
  const double R = grid.inradius();
  return ExteriorSpec({{R, 2.0 * R, 0.0}, {2.0 * R, 3.0 * R, -amplitude}}, 0.0);
}

namespace {

SolveResult descend(const ThresholdSetup& setup, const ExteriorSpec& exterior,
                    const Field* start) {
  const Problem p = Problem::make(setup.op, setup.sign, setup.weight_a, setup.q, exterior);
  if (start != nullptr)
    return pseudo_time_solve(p, setup.solver, Field(p.grid_ptr(), start->values(), exterior));
  return pseudo_time_solve(p, setup.solver, supersolution(p, setup.solver).upper);
}

}  // namespace

SolveResult threshold_solve(const ThresholdSetup& setup, double M, const Field* start) {
  return descend(setup, threshold_exterior(setup.op->grid(), M), start);
}

ThresholdResult threshold_search(const ThresholdSetup& setup, double M_lo, double M_hi,
                                 double tol_M, double tol_min) {
  if (!(M_lo < M_hi)) throw InvalidArgument("threshold bracket must satisfy M_lo < M_hi");
  if (!(tol_M > 0.0) || !(tol_min > 0.0))
    throw InvalidArgument("threshold tolerances must be positive");
  std::map<double, SolveResult> solved;
  const auto eval = [&](double M) {
    // The solution at the largest smaller M is a supersolution at M.
    auto below = solved.lower_bound(M);
    const Field* start = below == solved.begin() ? nullptr : &std::prev(below)->second.u;
    SolveResult r = threshold_solve(setup, M, start);
    const double m = r.u.min();
    solved.emplace(M, std::move(r));
    return m;
  };

  double lo = M_lo, hi = M_hi;
  double f_lo = eval(lo);
  double f_hi = eval(hi);
  if (!(f_lo > 0.0 && f_hi < 0.0))
    throw BracketFailure("min u does not change sign on [" + std::to_string(M_lo) + ", " +
                         std::to_string(M_hi) + "]");
  double star = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
  while (std::min(std::abs(f_lo), std::abs(f_hi)) > tol_min) {
    if (hi - lo <= tol_M) break;
    const double mid = 0.5 * (lo + hi);
    const double f = eval(mid);
    if (f > 0.0) {
      lo = mid;
      f_lo = f;
    } else {
      hi = mid;
      f_hi = f;
    }
    star = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
  }

  ThresholdResult out{star, {}, solved.at(star).u, solved.at(star).residual};
  for (const auto& [M, r] : solved) {
    if (!out.ladder.empty() && !(r.u.min() < out.ladder.back().min_u))
      throw MonotonicityViolation("min u is not strictly decreasing at M = " + std::to_string(M));
    out.ladder.push_back({M, r.u.min(), r.u.max()});
  }
  return out;
}

SweepResult norm_sweep(const ThresholdSetup& setup, std::vector<double> amplitudes,
                       double tol_zero, double probe_depth) {
  if (amplitudes.empty()) throw InvalidArgument("sweep needs at least one amplitude");
  std::sort(amplitudes.begin(), amplitudes.end());
  const DomainGrid& grid = setup.op->grid();
  const double s = setup.op->kernel().s;
  SweepResult out;
  std::optional<Field> previous;
  for (double amplitude : amplitudes) {
    // Amplitudes ascend, so the previous solution is a supersolution.
    SolveResult r = descend(setup, sweep_exterior(grid, amplitude),
                            previous ? &*previous : nullptr);
    const SmpReport smp = smp_check(r.u, s, tol_zero, probe_depth);
    out.rows.push_back({amplitude, l1s_norm(r.u.negative_part(), s), r.u.min(), smp.hopf_min,
                        smp.verdict});
    if (out.rows.size() > 1 && out.rows[out.rows.size() - 2].verdict != smp.verdict)
      ++out.transitions;
    if (!out.onset && smp.verdict != Verdict::strictly_positive) out.onset = amplitude;
    out.solutions.push_back(r.u);
    previous = std::move(r.u);
  }
  return out;
}

std::vector<GrowthFit> growth_exponent_fit(const Field& u, const std::vector<std::size_t>& dead_core,
                                           double tol_zero) {
  const DomainGrid& grid = u.grid();
  const Eigen::VectorXd& v = u.values();
  const double h = grid.h();
  std::vector<std::array<int, 2>> dirs = {{1, 0}, {-1, 0}};
  if (grid.dim() == 2) {
    dirs.push_back({0, 1});
    dirs.push_back({0, -1});
  }
  std::vector<GrowthFit> out;
  for (std::size_t dead : dead_core) {
    if (dead >= grid.size()) throw InvalidArgument("dead-core node out of range");
    const auto base = grid.lattice(dead);
    for (const auto& e : dirs) {
      // Positive nodes along the edge line; t is the distance from the dead node.
      std::vector<double> ts, logs;
      for (int k = 1;; ++k) {
        const int j = grid.node_at(base[0] + k * e[0], base[1] + k * e[1]);
        if (j < 0 || !(v[j] > tol_zero) || k * h > (kFitWindow + 1.0) * h) break;
        ts.push_back(k * h);
        logs.push_back(std::log(v[j]));
      }
      if (ts.size() < kFitMinSamples) continue;
      // Joint least squares in the crossing z in [0, h) and the exponent.
      double best_ssr = kInf, best_slope = 0.0, best_z = 0.0;
      std::size_t best_count = 0;
      for (int m = 0; m < kFitCandidates; ++m) {
        const double z = h * m / kFitCandidates;
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < ts.size(); ++i) {
          if (ts[i] - z > kFitWindow * h) break;
          xs.push_back(std::log(ts[i] - z));
          ys.push_back(logs[i]);
        }
        if (xs.size() < kFitMinSamples) continue;
        const LineFit fit = fit_line(xs, ys);
        // Residual per sample, so windows of different size compare fairly.
        const double score = fit.ssr / static_cast<double>(xs.size());
        if (score < best_ssr) {
          best_ssr = score;
          best_slope = fit.slope;
          best_z = z;
          best_count = xs.size();
        }
      }
      if (best_count < kFitMinSamples) continue;
      const Point dir{static_cast<double>(e[0]), static_cast<double>(e[1])};
      out.push_back({grid.node(dead) + best_z * dir, dir, best_slope, best_count});
    }
  }
  if (out.empty())
    throw InsufficientSamples("no free-boundary point has " + std::to_string(kFitMinSamples) +
                              " positive samples within the fit window");
  return out;
}

}  // namespace pucci

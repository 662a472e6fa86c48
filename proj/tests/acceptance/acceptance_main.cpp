// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion; exit 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pucci/barriers_norms.hpp"
#include "pucci/experiments.hpp"
#include "pucci/nonlocal_operator.hpp"
#include "pucci/scenario.hpp"
#include "pucci/solvers.hpp"

using namespace pucci;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // +inf when the criterion carries no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

GridPtr interval(double h, double half = 1.0) {
  return build_grid(1, DomainKind::interval, {half, 0.0, {}}, h, 10.0);
}
GridPtr disk(double h) { return build_grid(2, DomainKind::disk, {1.0, 1.0, {}}, h, 10.0); }

Eigen::Index at(std::size_t i) { return static_cast<Eigen::Index>(i); }

// Smooth random field: a few random trigonometric modes inside, random
// piecewise-constant shells outside.
Field random_field(const GridPtr& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  struct Mode {
    double amp, kx, ky, phase;
  };
  std::vector<Mode> modes(4);
  for (Mode& m : modes) m = {unit(rng), 3.0 * unit(rng), 3.0 * unit(rng), 3.0 * unit(rng)};
  std::vector<Shell> shells;
  double r = g->outradius();
  for (int k = 0; k < 3; ++k) {
    const double next = r + 0.5 + 0.5 * (1.0 + unit(rng));
    shells.push_back({r, next, unit(rng)});
    r = next;
  }
  const ExteriorSpec ext(shells, 0.5 * unit(rng));
  return Field::sample(
      g,
      [&](const Point& p) {
        double v = 0.0;
        for (const Mode& m : modes) v += m.amp * std::sin(m.kx * p[0] + m.ky * p[1] + m.phase);
        return v;
      },
      ext);
}

Field transformed(const Field& f, double factor, double offset) {
  Eigen::VectorXd v = factor * f.values();
  v.array() += offset;
  return Field(f.grid_ptr(), v, f.exterior().scaled(factor).shifted(offset));
}

double max_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().maxCoeff(); }

Outcome operator_exactness() {
  std::mt19937_64 rng(2024);
  std::size_t evaluations = 0, violations = 0;
  double worst_policy = 0.0;
  for (const GridPtr& g : {interval(1.0 / 256.0), disk(1.0 / 32.0)}) {
    const KernelSpec k = KernelSpec::make(g->dim(), 0.5, 0.5, 2.0);
    const NonlocalOperator op(g, k);
    std::uniform_real_distribution<double> mu(k.lambda, k.Lambda);
    std::uniform_int_distribution<std::size_t> node(0, g->size() - 1);
    for (int field = 0; field < 20; ++field) {
      const Field f = random_field(g, rng);
      const PolicyField best_plus = optimal_policy(op, f, Extremal::plus);
      const PolicyField best_minus = optimal_policy(op, f, Extremal::minus);
      // Independent random policies; each evaluation draws a node and one of them.
      std::vector<PolicyField> policies;
      for (int p = 0; p < 8; ++p) {
        PolicyField pf(g->size(), k.directions.size(), k.lambda);
        for (std::size_t i = 0; i < g->size(); ++i)
          for (std::size_t j = 0; j < k.directions.size(); ++j) pf(i, j) = mu(rng);
        policies.push_back(std::move(pf));
      }
      for (int e = 0; e < 1000; ++e) {
        const std::size_t i = node(rng);
        const double hi = eval_extremal(op, f, i, Extremal::plus);
        const double lo = eval_extremal(op, f, i, Extremal::minus);
        const double lin = eval_linear(op, f, i, policies[static_cast<std::size_t>(e) % policies.size()]);
        const double slack = 1e-12 * std::max(1.0, std::abs(lin));
        if (lo > lin + slack || lin > hi + slack) ++violations;
        ++evaluations;
        for (const auto& [best, target] : {std::pair{&best_plus, hi}, std::pair{&best_minus, lo}}) {
          const double rel = std::abs(eval_linear(op, f, i, *best) - target) / std::max(1.0, std::abs(target));
          worst_policy = std::max(worst_policy, rel);
        }
      }
    }
  }
  return {violations == 0 && worst_policy <= 1e-12,
          fmt("evaluations %zu, violations %zu, policy rel err %.2e", evaluations, violations, worst_policy)};
}

Outcome identities() {
  std::mt19937_64 rng(7);
  double collapse = 0.0, odd = 0.0, homogeneity = 0.0, shift = 0.0;
  for (const GridPtr& g : {interval(1.0 / 128.0), disk(1.0 / 16.0)}) {
    const NonlocalOperator same(g, KernelSpec::make(g->dim(), 0.4, 1.7, 1.7));
    const NonlocalOperator op(g, KernelSpec::make(g->dim(), 0.4, 0.6, 2.5));
    for (int trial = 0; trial < 5; ++trial) {
      const Field f = random_field(g, rng);
      const Eigen::VectorXd plus = operator_apply(same, f, Extremal::plus);
      const Eigen::VectorXd minus = operator_apply(same, f, Extremal::minus);
      const PolicyField flat(g->size(), same.num_directions(), 1.7);
      Eigen::VectorXd linear(at(g->size()));
      for (std::size_t i = 0; i < g->size(); ++i) linear[at(i)] = eval_linear(same, f, i, flat);
      const double scale = std::max(1.0, max_abs(linear));
      collapse = std::max({collapse, max_abs(plus - linear) / scale, max_abs(minus - linear) / scale});
      for (Extremal sign : {Extremal::plus, Extremal::minus}) {
        const Extremal other = sign == Extremal::plus ? Extremal::minus : Extremal::plus;
        const Eigen::VectorXd base = operator_apply(op, f, sign);
        const double sc = std::max(1.0, max_abs(base));
        odd = std::max(odd, max_abs(operator_apply(op, transformed(f, -1.0, 0.0), other) + base) / sc);
        homogeneity = std::max(
            homogeneity, max_abs(operator_apply(op, transformed(f, 3.5, 0.0), sign) - 3.5 * base) / (3.5 * sc));
        shift = std::max(shift, max_abs(operator_apply(op, transformed(f, 1.0, 2.25), sign) - base) / sc);
      }
    }
  }
  const double worst = std::max({collapse, odd, homogeneity, shift});
  return {worst <= 1e-12, fmt("collapse %.1e, odd %.1e, homogeneity %.1e, shift %.1e", collapse, odd,
                              homogeneity, shift)};
}

Outcome scaling_law() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  const double r = 2.0;
  for (double s : {0.25, 0.5, 0.75}) {
    for (const GridPtr& g : {interval(1.0 / 64.0), disk(1.0 / 16.0)}) {
      // The fine grid is the coarse one shrunk by 1/r, node for node.
      const GridPtr fine = std::make_shared<const DomainGrid>(g->scaled(1.0 / r));
      const KernelSpec k = KernelSpec::make(g->dim(), s, 0.5, 2.0);
      const NonlocalOperator coarse_op(g, k), fine_op(fine, k);
      const Field f = random_field(g, rng);
      const Field fr(fine, f.values(), f.exterior().dilated(1.0 / r));  // f(r x)
      for (Extremal sign : {Extremal::plus, Extremal::minus}) {
        const Eigen::VectorXd lhs = operator_apply(fine_op, fr, sign);
        const Eigen::VectorXd rhs = std::pow(r, 2.0 * s) * operator_apply(coarse_op, f, sign);
        worst = std::max(worst, max_abs(lhs - rhs) / std::max(1.0, max_abs(rhs)));
      }
    }
  }
  return {worst <= 1e-8, fmt("worst relative deviation %.2e", worst)};
}

Outcome barrier_constancy() {
  const double s = 0.5;
  const GridPtr g = interval(1.0 / 512.0);
  const NonlocalOperator op(g, KernelSpec::make(1, s, 1.0, 1.0, normalization(NormalizationPreset::fractional_laplacian, 1, s)));
  const Field f = Field::sample(g, [&](const Point& p) { return std::pow(1.0 - p[0] * p[0], s); });
  const Eigen::VectorXd v = operator_apply(op, f, Extremal::plus);
  double lo = kInf, hi = -kInf, sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < g->size(); ++i)
    if (std::abs(g->node(i)[0]) <= 0.9) {
      lo = std::min(lo, v[at(i)]);
      hi = std::max(hi, v[at(i)]);
      sum += v[at(i)];
      ++count;
    }
  const double variation = (hi - lo) / std::abs(sum / count);
  return {variation <= 0.02, fmt("relative variation %.4f, mean %.5f", variation, sum / count)};
}

Outcome negpart_bound() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = trial % 2 == 0 ? 1 : 2;
    const double s = 0.2 + 0.6 * unit(rng);
    const double Lambda = 1.0 + 3.0 * unit(rng);
    // B_R(x0) = Omega = B_1, S = B_{1/2}, so d0 = 1/2.
    const GridPtr g = dim == 1 ? interval(1.0 / 64.0) : disk(1.0 / 16.0);
    const NonlocalOperator op(g, KernelSpec::make(dim, s, 1.0, Lambda, 1.0 - s));
    std::vector<Shell> shells;
    double r = 1.0;
    for (int k = 0; k < 4; ++k) {
      const double next = r + 0.1 + 2.0 * unit(rng);
      shells.push_back({r, next, 4.0 * (unit(rng) - 0.7)});
      r = next;
    }
    const Field f = Field::sample(g, [&](const Point& p) { return 1.0 + std::cos(5.0 * p[0]); },
                                  ExteriorSpec(shells, -unit(rng)));
    const Field fm = f.negative_part();
    const Eigen::VectorXd m = operator_apply(op, fm, Extremal::plus);
    const double bound = negpart_bound_constant(0.5, s, dim, Lambda) * l1s_norm(fm, s);
    for (std::size_t i = 0; i < g->size(); ++i)
      if (norm(g->node(i)) <= 0.5) {
        if (m[at(i)] > bound) ++violations;
        if (bound > 0.0) worst_ratio = std::max(worst_ratio, m[at(i)] / bound);
      }
  }
  return {violations == 0, fmt("violations %d, worst max/bound %.3f", violations, worst_ratio)};
}

Outcome hopf_quotient() {
  const double h = 1.0 / 512.0;
  const Field u = Field::sample(interval(h), [](const Point& p) { return std::sqrt(1.0 - p[0] * p[0]); });
  const SmpReport r = smp_check(u, 0.5, 1e-8, 8.0 * h);
  double worst = 0.0;
  for (const HopfSegment& seg : r.hopf) worst = std::max(worst, std::abs(seg.min_quotient / std::sqrt(2.0) - 1.0));
  return {!r.hopf.empty() && worst <= 0.05, fmt("worst relative deviation from sqrt 2: %.4f", worst)};
}

Outcome sandwich() {
  const double h = 1.0 / 256.0, s = 0.5, tol = 1e-6;
  const auto op = std::make_shared<const NonlocalOperator>(interval(h), KernelSpec::make(1, s, 1.0, 2.0));
  const Problem p = Problem::make(op, Extremal::minus, 1.0, 0.5, ExteriorSpec::constant(0.0));
  SolverConfig cfg;
  cfg.tol_residual = tol;
  const SandwichResult r = existence_sandwich(p, cfg);
  const double slack = tol + 2.0 * std::pow(h, s);
  const double lower = (r.u.values() - r.lower.values()).minCoeff();
  const double upper = (r.upper.values() - r.u.values()).minCoeff();
  const double res = max_abs(residual(p, r.u));
  const SmpReport smp = smp_check(r.u, s, 10.0 * tol, 8.0 * h);
  const bool pass = lower >= -slack && upper >= -slack && res <= tol && smp.verdict == Verdict::strictly_positive;
  return {pass, fmt("lower margin %.3e, upper margin %.3e, residual %.2e, verdict %s", lower, upper, res,
                    std::string(to_string(smp.verdict)).c_str())};
}

Outcome eigenpair() {
  const double h = 1.0 / 256.0, s = 0.5;
  const KernelSpec k = KernelSpec::make(1, s, 1.0, 2.0);
  const NonlocalOperator op(interval(h), k), half(interval(h, 0.5), k);
  const SolverConfig cfg;
  const EigenPair ep = principal_eigenpair(op, Extremal::minus, cfg);
  const EigenPair eh = principal_eigenpair(half, Extremal::minus, cfg);
  const double res =
      max_abs(operator_apply(op, ep.phi1, Extremal::minus) + ep.lambda1 * ep.phi1.values());
  const double ratio = eh.lambda1 / ep.lambda1 / std::pow(2.0, 2.0 * s);
  const bool pass = res <= 1e-6 && ep.phi1.min() > 0.0 && std::abs(ratio - 1.0) <= 0.01;
  return {pass, fmt("lambda1 %.6f, residual %.2e, min phi1 %.3e, scaling ratio %.5f", ep.lambda1, res,
                    ep.phi1.min(), ratio)};
}

// Threshold family on (-1, 1) with an anisotropic kernel; shared by 9 and 11.
struct ThresholdRun {
  ThresholdResult search;
  SolveResult exhibit;
  SmpReport smp;
  double tol_zero;
};

const ThresholdRun& threshold_run() {
  static const ThresholdRun run = [] {
    const GridPtr g = interval(1.0 / 128.0);
    ThresholdSetup st{std::make_shared<const NonlocalOperator>(g, KernelSpec::make(1, 0.5, 1.0, 4.0)),
                      Extremal::minus, Eigen::VectorXd::Ones(at(g->size())), 0.5, SolverConfig{}};
    st.solver.max_iter = 2000000;
    ThresholdResult tr = threshold_search(st, 0.0, 6.0, 1e-6, 1e-3);
    SolveResult ex = threshold_solve(st, tr.M_star + 0.1, &tr.u_star);
    const double tol_zero = 10.0 * st.solver.tol_residual;
    SmpReport smp = smp_check(ex.u, 0.5, tol_zero, 8.0 * g->h());
    return ThresholdRun{std::move(tr), std::move(ex), std::move(smp), tol_zero};
  }();
  return run;
}

Outcome threshold() {
  const ThresholdRun& run = threshold_run();
  double gap = kInf;
  const auto& ladder = run.search.ladder;
  for (std::size_t i = 1; i < ladder.size(); ++i) gap = std::min(gap, ladder[i - 1].min_u - ladder[i].min_u);
  const double min_star = run.search.u_star.min();
  const bool exhibit = !run.smp.dead_core.empty() && run.exhibit.u.max() > run.tol_zero;
  return {ladder.size() >= 2 && gap > 0.0 && std::abs(min_star) <= 1e-3 && exhibit,
          fmt("M_star %.6f, |min u| %.2e, ladder %zu rows (gap %.2e), dead core %zu nodes, max u %.4f",
              run.search.M_star, std::abs(min_star), ladder.size(), gap, run.smp.dead_core.size(),
              run.exhibit.u.max())};
}

Outcome sweep() {
  const GridPtr g = interval(1.0 / 128.0);
  ThresholdSetup st{std::make_shared<const NonlocalOperator>(g, KernelSpec::make(1, 0.5, 1.0, 4.0)),
                    Extremal::minus, Eigen::VectorXd::Ones(at(g->size())), 0.5, SolverConfig{}};
  st.solver.max_iter = 2000000;
  const std::vector<double> amps{0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
  const SweepResult sw = norm_sweep(st, amps, 1e-5, 8.0 * g->h());
  bool below = true;
  for (const SweepRow& row : sw.rows)
    if (sw.onset && row.amplitude < *sw.onset) below = below && row.verdict == Verdict::strictly_positive;
  const bool pass = sw.onset && *sw.onset > 0.0 && below && sw.transitions <= 1;
  return {pass, fmt("onset %.4g, transitions %d", sw.onset.value_or(-1.0), sw.transitions)};
}

Outcome flatness() {
  const ThresholdRun& run = threshold_run();
  if (run.smp.dead_core.empty()) return {false, "no dead core to fit"};
  const std::vector<GrowthFit> fits = growth_exponent_fit(run.exhibit.u, run.smp.dead_core, run.tol_zero);
  double worst = kInf;
  for (const GrowthFit& f : fits) worst = std::min(worst, f.exponent);
  return {worst >= 1.8 * 0.5, fmt("%zu free-boundary points, smallest exponent %.4f (required %.2f)", fits.size(),
                                  worst, 0.9)};
}

Outcome determinism() {
  std::size_t runs = 0;
  std::vector<std::string> differing;
  for (const auto& entry : std::filesystem::directory_iterator(PUCCI_CONFIG_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    const ScenarioConfig c = load_config(entry.path());
    const std::string stem = entry.path().stem().string();
    const std::string prefix = stem.substr(0, stem.find('_'));
    const Mode mode = prefix == "validate" ? Mode::validate_operator : mode_from_string(prefix);
    const std::string first = summary_json(run_scenario(c, mode), c);
    const std::string second = summary_json(run_scenario(c, mode), c);
    ++runs;
    if (first != second) differing.push_back(stem);
  }
  std::string detail = fmt("%zu scenarios rerun", runs);
  for (const std::string& d : differing) detail += ", differs: " + d;
  return {runs > 0 && differing.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "operator_exactness", 60.0, operator_exactness},
      {2, "identities", kInf, identities},
      {3, "scaling_law", kInf, scaling_law},
      {4, "barrier_constancy", 30.0, barrier_constancy},
      {5, "negative_part_bound", kInf, negpart_bound},
      {6, "hopf_quotient", kInf, hopf_quotient},
      {7, "existence_sandwich", 60.0, sandwich},
      {8, "eigenpair", kInf, eigenpair},
      {9, "threshold", 300.0, threshold},
      {10, "norm_sweep", kInf, sweep},
      {11, "dead_core_flatness", kInf, flatness},
      {12, "determinism", kInf, determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.time_limit_s) {
      out.pass = false;
      out.detail += fmt(", runtime above %.0f s", c.time_limit_s);
    }
    std::printf("%s %2d %-20s %s [%.2f s]\n", out.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), out.detail.c_str(),
                seconds);
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

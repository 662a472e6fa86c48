// SPDX-License-Identifier: Apache-2.0
#include "pucci/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <system_error>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "pucci/barriers_norms.hpp"
#include "pucci/errors.hpp"
#include "pucci/experiments.hpp"

namespace pucci {

namespace {

using Index = Eigen::Index;
using json = nlohmann::ordered_json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Config reading

int line_of(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  return mark.line < 0 ? 0 : mark.line + 1;
}

/// One mapping of the config. Every key read is remembered so that finish()
/// can reject the rest.
class Section {
 public:
  Section(const YAML::Node& node, std::string path, int line)
      : node_(node), path_(std::move(path)), line_(line) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ConfigError(path_, line_of(node_), "expected a mapping");
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return missing();
    return node_[key];
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  int line(const std::string& key) const { return has(key) ? line_of(node_[key]) : line_; }

  template <class T>
  T get(const std::string& key, T fallback) {
    const YAML::Node n = raw(key);
    if (!n) return fallback;
    return convert<T>(n, key);
  }

  template <class T>
  T convert(const YAML::Node& n, const std::string& key) const {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(key_path(key), line_of(n), "value has the wrong type");
    }
  }

  Section child(const std::string& key) {
    const YAML::Node n = raw(key);
    return Section(n, key_path(key), n ? line_of(n) : line_);
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError(key_path(key), line_of(kv.first), "unknown key");
    }
  }

 private:
  // An undefined node: converts to false.
  static YAML::Node missing() {
    const YAML::Node empty;
    return empty["missing"];
  }

  YAML::Node node_;
  std::string path_;
  int line_;
  std::set<std::string> used_;
};

void require_that(bool ok, Section& sec, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(sec.key_path(key), sec.line(key), what);
}

Point read_pair(Section& sec, const std::string& key, Point fallback) {
  const YAML::Node n = sec.raw(key);
  if (!n) return fallback;
  if (n.IsScalar()) {
    const double v = sec.convert<double>(n, key);
    return {v, v};
  }
  if (!n.IsSequence() || n.size() != 2)
    throw ConfigError(sec.key_path(key), line_of(n), "expected a number or a pair");
  return {sec.convert<double>(n[0], key), sec.convert<double>(n[1], key)};
}

double read_c_norm(Section& sec, int dim, double s) {
  const YAML::Node n = sec.raw("c_norm");
  if (!n) return 1.0;
  if (!n.IsScalar()) throw ConfigError(sec.key_path("c_norm"), line_of(n), "expected a scalar");
  double value = 0.0;
  const std::string text = n.Scalar();
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return value;
  try {
    return normalization(normalization_preset_from_string(text), dim, s);
  } catch (const Error&) {
    throw ConfigError(sec.key_path("c_norm"), line_of(n),
                      "expected a number or unit, one_minus_s, fractional_laplacian");
  }
}

void read_domain(Section sec, DomainConfig& d) {
  d.dim = sec.get<int>("dim", d.dim);
  require_that(d.dim == 1 || d.dim == 2, sec, "dim", "dim must be 1 or 2");
  const std::string kind = sec.get<std::string>("kind", d.dim == 1 ? "interval" : "disk");
  try {
    d.kind = domain_kind_from_string(kind);
  } catch (const Error&) {
    throw ConfigError(sec.key_path("kind"), sec.line("kind"), "unknown domain kind '" + kind + "'");
  }
  require_that((d.dim == 1) == (d.kind == DomainKind::interval), sec, "kind",
               "interval domains are one-dimensional, disk and box two-dimensional");
  const Point half = read_pair(sec, "extent", {1.0, 1.0});
  d.extent.half_x = half[0];
  d.extent.half_y = d.kind == DomainKind::box ? half[1] : 0.0;
  require_that(half[0] > 0.0 && (d.kind != DomainKind::box || half[1] > 0.0), sec, "extent",
               "extent must be positive");
  d.extent.center = read_pair(sec, "center", {0.0, 0.0});
  if (d.dim == 1) d.extent.center[1] = 0.0;
  d.h = sec.get<double>("h", d.h);
  require_that(d.h > 0.0 && d.h < half[0], sec, "h", "h must lie in (0, extent)");
  d.r_trunc = sec.get<double>("r_trunc", d.r_trunc);
  require_that(d.r_trunc > 0.0, sec, "r_trunc", "r_trunc must be positive");
  sec.finish();
}

void read_kernel(Section sec, int dim, KernelConfig& k) {
  k.s = sec.get<double>("s", k.s);
  require_that(k.s > 0.0 && k.s < 1.0, sec, "s", "s must lie in (0, 1)");
  k.lambda = sec.get<double>("lambda", k.lambda);
  require_that(k.lambda > 0.0, sec, "lambda", "lambda must be positive");
  k.Lambda = sec.get<double>("big_lambda", k.lambda > k.Lambda ? k.lambda : k.Lambda);
  require_that(k.Lambda >= k.lambda, sec, "big_lambda", "big_lambda must be at least lambda");
  k.c_norm = read_c_norm(sec, dim, k.s);
  require_that(k.c_norm > 0.0, sec, "c_norm", "c_norm must be positive");
  k.n_dirs = sec.get<int>("n_dirs", k.n_dirs);
  require_that(k.n_dirs >= 1, sec, "n_dirs", "n_dirs must be positive");
  k.radial_points = sec.get<int>("radial_points", k.radial_points);
  require_that(k.radial_points == 4 || k.radial_points == 6 || k.radial_points == 8 ||
                   k.radial_points == 10,
               sec, "radial_points", "radial_points must be 4, 6, 8 or 10");
  sec.finish();
}

void read_problem(Section sec, ProblemConfig& p) {
  const std::string sign = sec.get<std::string>("sign", "minus");
  try {
    p.sign = extremal_from_string(sign);
  } catch (const Error&) {
    throw ConfigError(sec.key_path("sign"), sec.line("sign"), "sign must be plus or minus");
  }
  p.q = sec.get<double>("q", p.q);
  require_that(p.q > 0.0 && p.q < 1.0, sec, "q",
               "q must lie in (0, 1); the superlinear regime is not supported");
  const YAML::Node a = sec.raw("a");
  if (a && a.IsMap()) {
    Section as(a, sec.key_path("a"), line_of(a));
    p.a.value = as.get<double>("value", 1.0);
    p.a.slope = read_pair(as, "slope", {0.0, 0.0});
    as.finish();
  } else if (a) {
    p.a.value = sec.convert<double>(a, "a");
  }
  const YAML::Node shells = sec.raw("exterior_shells");
  if (shells) {
    if (!shells.IsSequence())
      throw ConfigError(sec.key_path("exterior_shells"), line_of(shells), "expected a list");
    for (const auto& item : shells) {
      if (!item.IsSequence() || item.size() != 3)
        throw ConfigError(sec.key_path("exterior_shells"), line_of(item),
                          "each shell is [r_inner, r_outer, value]");
      p.shells.push_back({sec.convert<double>(item[0], "exterior_shells"),
                          sec.convert<double>(item[1], "exterior_shells"),
                          sec.convert<double>(item[2], "exterior_shells")});
    }
  }
  p.far_value = sec.get<double>("far_value", p.far_value);
  try {
    ExteriorSpec(p.shells, p.far_value);
  } catch (const Error& e) {
    throw ConfigError(sec.key_path("exterior_shells"), sec.line("exterior_shells"), e.what());
  }
  sec.finish();
}

void read_solver(Section sec, SolverConfig& c) {
  c.tau_factor = sec.get<double>("tau_factor", c.tau_factor);
  require_that(c.tau_factor > 0.0 && c.tau_factor <= 1.0, sec, "tau_factor",
               "tau_factor must lie in (0, 1]");
  c.tol_residual = sec.get<double>("tol_residual", c.tol_residual);
  require_that(c.tol_residual > 0.0, sec, "tol_residual", "tol_residual must be positive");
  c.max_iter = sec.get<int>("max_iter", c.max_iter);
  require_that(c.max_iter > 0, sec, "max_iter", "max_iter must be positive");
  c.policy_max_outer = sec.get<int>("policy_max_outer", c.policy_max_outer);
  require_that(c.policy_max_outer > 0, sec, "policy_max_outer",
               "policy_max_outer must be positive");
  sec.finish();
}

void read_experiment(Section sec, ExperimentConfig& e) {
  e.seed = sec.get<std::uint64_t>("seed", e.seed);
  if (sec.has("tol_zero")) {
    e.tol_zero = sec.get<double>("tol_zero", 0.0);
    require_that(*e.tol_zero > 0.0, sec, "tol_zero", "tol_zero must be positive");
  }
  e.probe_depth_factor = sec.get<double>("probe_depth_factor", e.probe_depth_factor);
  require_that(e.probe_depth_factor > 0.0, sec, "probe_depth_factor",
               "probe_depth_factor must be positive");
  e.M_lo = sec.get<double>("M_lo", e.M_lo);
  e.M_hi = sec.get<double>("M_hi", e.M_hi);
  require_that(e.M_lo < e.M_hi, sec, "M_hi", "M_hi must exceed M_lo");
  e.tol_M = sec.get<double>("tol_M", e.tol_M);
  require_that(e.tol_M > 0.0, sec, "tol_M", "tol_M must be positive");
  e.tol_min = sec.get<double>("tol_min", e.tol_min);
  require_that(e.tol_min > 0.0, sec, "tol_min", "tol_min must be positive");
  e.dead_core_offset = sec.get<double>("dead_core_offset", e.dead_core_offset);
  e.growth_factor = sec.get<double>("growth_factor", e.growth_factor);
  e.amplitudes = sec.get<std::vector<double>>("amplitudes", e.amplitudes);
  require_that(!e.amplitudes.empty(), sec, "amplitudes", "amplitudes must not be empty");
  for (double a : e.amplitudes)
    require_that(a >= 0.0, sec, "amplitudes", "amplitudes must be nonnegative");
  e.vminus_sup = sec.get<double>("vminus_sup", e.vminus_sup);
  require_that(e.vminus_sup >= 0.0, sec, "vminus_sup", "vminus_sup must be nonnegative");
  e.phi_levels = sec.get<int>("phi_levels", e.phi_levels);
  require_that(e.phi_levels >= 1, sec, "phi_levels", "phi_levels must be positive");
  e.phi_growth = sec.get<double>("phi_growth", e.phi_growth);
  require_that(e.phi_growth > 1.0, sec, "phi_growth", "phi_growth must exceed 1");
  e.samples = sec.get<int>("samples", e.samples);
  require_that(e.samples >= 1, sec, "samples", "samples must be positive");
  e.evaluations = sec.get<int>("evaluations", e.evaluations);
  require_that(e.evaluations >= 1, sec, "evaluations", "evaluations must be positive");
  e.barrier_radius = sec.get<double>("barrier_radius", e.barrier_radius);
  require_that(e.barrier_radius > 0.0 && e.barrier_radius < 1.0, sec, "barrier_radius",
               "barrier_radius must lie in (0, 1)");
  e.barrier_tol = sec.get<double>("barrier_tol", e.barrier_tol);
  sec.finish();
}

// ---------------------------------------------------------------------------
// Runs

struct Context {
  const ScenarioConfig& config;
  GridPtr grid;
  OperatorPtr op;
  Eigen::VectorXd weight;
  ExteriorSpec exterior;
  double s;
  double tol_zero;
  double probe_depth;
};

void add_check(ScenarioResult& r, std::string name, bool pass, double margin) {
  r.checks.push_back({std::move(name), pass, margin});
}

Problem make_problem(const Context& ctx, const ExteriorSpec& exterior) {
  const ProblemConfig& pc = ctx.config.problem;
  return Problem::make(ctx.op, pc.sign, ctx.weight, pc.q, exterior);
}

json smp_json(const SmpReport& smp) {
  json j;
  j["verdict"] = std::string(to_string(smp.verdict));
  j["dead_core_count"] = smp.dead_core.size();
  j["hopf"] = json::array();
  for (const HopfSegment& seg : smp.hopf)
    j["hopf"].push_back({{"segment", seg.name}, {"min_quotient", seg.min_quotient},
                         {"samples", seg.samples}});
  return j;
}

void run_solve(const Context& ctx, ScenarioResult& r, bool hopf_mode) {
  const Problem p = make_problem(ctx, ctx.exterior);
  const SolverConfig& cfg = ctx.config.solver;
  SandwichResult sw = existence_sandwich(p, cfg);
  const SandwichCertificate& c = sw.certificate;
  r.residual = residual(p, sw.u);
  r.lambda1 = c.lambda1;
  const double res = r.residual.cwiseAbs().maxCoeff();
  add_check(r, "residual", res <= cfg.tol_residual, cfg.tol_residual - res);
  const double slack = cfg.tol_residual + 2.0 * std::pow(ctx.grid->h(), ctx.s);
  const double sandwich = std::min(c.lower_margin, c.upper_margin) + slack;
  add_check(r, "sandwich", sandwich >= 0.0, sandwich);

  const SmpReport smp = smp_check(sw.u, ctx.s, ctx.tol_zero, ctx.probe_depth);
  const bool nonneg_data = ctx.exterior.negative_part() == ctx.exterior.scaled(0.0) &&
                           ctx.weight.minCoeff() > 0.0;
  if (nonneg_data)
    add_check(r, "strong_maximum_principle", smp.verdict == Verdict::strictly_positive,
              sw.u.min() - ctx.tol_zero);
  if (hopf_mode) add_check(r, "hopf_quotient", smp.hopf_min > 0.0, smp.hopf_min);

  json d;
  d["certificate"] = {{"lambda1", c.lambda1},       {"a0", c.a0},
                      {"epsilon", c.epsilon},       {"k", c.k},
                      {"psi_sup", c.psi_sup},       {"ball_center", {c.ball_center[0], c.ball_center[1]}},
                      {"ball_radius", c.ball_radius}, {"ball_is_domain", c.ball_is_domain},
                      {"lower_margin", c.lower_margin}, {"upper_margin", c.upper_margin},
                      {"residual", c.residual},     {"iterations", c.iterations},
                      {"sandwich_violation", c.sandwich_violation}};
  d["smp"] = smp_json(smp);

  // Maximum-point checks need u <= 0 outside and a nontrivial maximum.
  if (ctx.exterior.nonpositive() && sw.u.max() > ctx.tol_zero) {
    const LocalizationCheck loc = max_localization_check(sw.u, ctx.weight);
    double a_at_max = kInf;
    for (std::size_t i : loc.argmax) a_at_max = std::min(a_at_max, ctx.weight[static_cast<Index>(i)]);
    add_check(r, "max_localization", loc.pass, a_at_max);
    const KernelSpec& k = ctx.op->kernel();
    const WeightBound wb = weight_bound_check(sw.u, ctx.weight, p.q, k, 0.0, k.lambda);
    add_check(r, "weight_bound", wb.margin >= 0.0, wb.margin);
    double tail = -kInf;
    for (std::size_t i = 0; i < ctx.grid->size(); ++i)
      tail = std::max(tail, exterior_tail_check(sw.u, i, ctx.s));
    add_check(r, "exterior_tail", tail <= 0.0, 0.0 - tail);
    d["weight_bound"] = {{"node", wb.node},
                         {"R", wb.R},
                         {"C_n", wb.C_n},
                         {"margin_lambda", wb.margin_lambda},
                         {"margin_Lambda", wb.margin_Lambda}};
  }
  r.details = d.dump();
  r.u = std::move(sw.u);
}

void run_eigen(const Context& ctx, ScenarioResult& r) {
  const SolverConfig& cfg = ctx.config.solver;
  const Extremal sign = ctx.config.problem.sign;
  EigenPair ep = principal_eigenpair(*ctx.op, sign, cfg);
  r.lambda1 = ep.lambda1;
  r.residual = operator_apply(*ctx.op, ep.phi1, sign) + ep.lambda1 * ep.phi1.values();
  add_check(r, "residual", ep.residual <= cfg.tol_residual, cfg.tol_residual - ep.residual);
  add_check(r, "positivity", ep.phi1.min() > 0.0, ep.phi1.min());
  // lambda1(Omega / 2) = 2^{2s} lambda1(Omega), the half domain at the same h.
  const DomainConfig& dc = ctx.config.domain;
  const Extent ext{0.5 * dc.extent.half_x, 0.5 * dc.extent.half_y, 0.5 * dc.extent.center};
  const GridPtr half = build_grid(dc.dim, dc.kind, ext, dc.h, dc.r_trunc);
  const EigenPair hp = principal_eigenpair(NonlocalOperator(half, ctx.op->kernel()), sign, cfg);
  const double ratio = hp.lambda1 / ep.lambda1;
  const double expected = std::pow(2.0, 2.0 * ctx.s);
  const double rel = std::abs(ratio / expected - 1.0);
  add_check(r, "domain_scaling", rel <= 0.01, 0.01 - rel);
  json d;
  d["lambda1"] = ep.lambda1;
  d["iterations"] = ep.iterations;
  d["eigen_residual"] = ep.residual;
  d["lambda1_half_domain"] = hp.lambda1;
  d["scaling_ratio"] = ratio;
  d["scaling_expected"] = expected;
  r.details = d.dump();
  r.u = std::move(ep.phi1);
}

void run_barriers(const Context& ctx, ScenarioResult& r) {
  const ExperimentConfig& e = ctx.config.experiment;
  PhiResult phi = build_phi(*ctx.op, e.vminus_sup, e.phi_levels, e.phi_growth);
  r.residual = operator_apply(*ctx.op, phi.field, Extremal::minus);
  for (const char* line : {"lower_bound", "upper_bound", "subsolution", "exterior_zero"})
    add_check(r, line, phi.report.violations(line) == 0, phi.report.min_slack(line));
  r.details = json::parse(phi.report.to_json()).dump();
  r.u = std::move(phi.field);
}

void run_threshold(const Context& ctx, ScenarioResult& r) {
  const ScenarioConfig& c = ctx.config;
  const ExperimentConfig& e = c.experiment;
  const ThresholdSetup setup{ctx.op, c.problem.sign, ctx.weight, c.problem.q, c.solver};
  ThresholdResult tr = threshold_search(setup, e.M_lo, e.M_hi, e.tol_M, e.tol_min);
  r.m_star = tr.M_star;
  r.residual = residual(make_problem(ctx, tr.u_star.exterior()), tr.u_star);
  const double min_star = tr.u_star.min();
  add_check(r, "threshold_min", std::abs(min_star) <= e.tol_min, e.tol_min - std::abs(min_star));
  double gap = kInf;
  for (std::size_t i = 1; i < tr.ladder.size(); ++i)
    gap = std::min(gap, tr.ladder[i - 1].min_u - tr.ladder[i].min_u);
  add_check(r, "ladder_decreasing", gap > 0.0, gap);

  json d;
  d["ladder"] = json::array();
  for (const LadderRow& row : tr.ladder)
    d["ladder"].push_back({{"M", row.M}, {"min_u", row.min_u}, {"max_u", row.max_u}});

  // Dead-core exhibit just past the threshold.
  const double M_exhibit = tr.M_star + e.dead_core_offset;
  const SolveResult ex = threshold_solve(setup, M_exhibit, &tr.u_star);
  const SmpReport smp = smp_check(ex.u, ctx.s, ctx.tol_zero, ctx.probe_depth);
  const bool exhibit = !smp.dead_core.empty() && ex.u.max() > ctx.tol_zero;
  add_check(r, "dead_core_exhibit", exhibit, ex.u.max() - ctx.tol_zero);
  json x = {{"M", M_exhibit},
            {"min_u", ex.u.min()},
            {"max_u", ex.u.max()},
            {"residual", ex.residual},
            {"dead_core_count", smp.dead_core.size()},
            {"verdict", std::string(to_string(smp.verdict))}};
  x["growth"] = json::array();
  const double required = e.growth_factor * ctx.s;
  if (exhibit) {
    try {
      double worst = kInf;
      for (const GrowthFit& f : growth_exponent_fit(ex.u, smp.dead_core, ctx.tol_zero)) {
        worst = std::min(worst, f.exponent);
        x["growth"].push_back({{"free_boundary", {f.free_boundary[0], f.free_boundary[1]}},
                               {"direction", {f.direction[0], f.direction[1]}},
                               {"exponent", f.exponent},
                               {"samples", f.samples}});
      }
      add_check(r, "growth_exponent", worst >= required, worst - required);
    } catch (const InsufficientSamples&) {
      add_check(r, "growth_exponent", false, -kInf);
    }
  }
  d["exhibit"] = x;
  r.details = d.dump();
  r.u = std::move(tr.u_star);
}

void run_sweep(const Context& ctx, ScenarioResult& r) {
  const ScenarioConfig& c = ctx.config;
  const ThresholdSetup setup{ctx.op, c.problem.sign, ctx.weight, c.problem.q, c.solver};
  SweepResult sw = norm_sweep(setup, c.experiment.amplitudes, ctx.tol_zero, ctx.probe_depth);
  const SweepRow& first = sw.rows.front();
  add_check(r, "base_positive",
            first.amplitude == 0.0 && first.verdict == Verdict::strictly_positive, first.min_u);
  add_check(r, "onset_positive", sw.onset.has_value() && *sw.onset > 0.0,
            sw.onset.value_or(-kInf));
  add_check(r, "single_transition", sw.transitions <= 1, 1.0 - sw.transitions);
  json d;
  d["rows"] = json::array();
  for (const SweepRow& row : sw.rows)
    d["rows"].push_back({{"amplitude", row.amplitude},
                         {"l1s_neg", row.l1s_neg},
                         {"min_u", row.min_u},
                         {"hopf_min", row.hopf_min},
                         {"verdict", std::string(to_string(row.verdict))}});
  if (sw.onset) d["onset_amplitude"] = *sw.onset;
  d["transitions"] = sw.transitions;
  r.residual = residual(make_problem(ctx, sw.solutions.front().exterior()), sw.solutions.front());
  r.details = d.dump();
  r.u = std::move(sw.solutions.front());
}

/// Random trigonometric field on Omega with zero exterior data.
Field random_field(const GridPtr& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double coef[4], freq[4][2], phase[4];
  for (int m = 0; m < 4; ++m) {
    coef[m] = unit(rng);
    freq[m][0] = 3.0 * unit(rng);
    freq[m][1] = grid->dim() == 2 ? 3.0 * unit(rng) : 0.0;
    phase[m] = std::numbers::pi * unit(rng);
  }
  return Field::sample(grid, [&](const Point& x) {
    double v = 0.0;
    for (int m = 0; m < 4; ++m) v += coef[m] * std::cos(freq[m][0] * x[0] + freq[m][1] * x[1] + phase[m]);
    return v;
  });
}

void run_validate_operator(const Context& ctx, ScenarioResult& r) {
  const ExperimentConfig& e = ctx.config.experiment;
  const NonlocalOperator& op = *ctx.op;
  const KernelSpec& k = op.kernel();
  const ExteriorTerms zero = op.exterior_terms(ExteriorSpec::constant(0.0));
  std::mt19937_64 rng(e.seed);
  std::uniform_real_distribution<double> mu_dist(k.lambda, k.Lambda);
  std::size_t violations = 0;
  double bracket_margin = kInf, policy_err = 0.0, symmetry_err = 0.0;
  for (int sample = 0; sample < e.samples; ++sample) {
    const Field f = random_field(ctx.grid, rng);
    const Eigen::MatrixXd integrals = op.directional_integrals(f.values(), zero);
    const Eigen::VectorXd plus = extremal_from_integrals(k, integrals, Extremal::plus);
    const Eigen::VectorXd minus = extremal_from_integrals(k, integrals, Extremal::minus);
    const double scale = std::max(1.0, plus.cwiseAbs().maxCoeff());
    for (int trial = 0; trial < e.evaluations; ++trial) {
      PolicyField mu(op.size(), op.num_directions(), k.lambda);
      for (std::size_t i = 0; i < op.size(); ++i)
        for (std::size_t j = 0; j < op.num_directions(); ++j) mu(i, j) = mu_dist(rng);
      const Eigen::VectorXd lin = linear_from_integrals(k, integrals, mu);
      const double m = std::min((lin - minus).minCoeff(), (plus - lin).minCoeff());
      bracket_margin = std::min(bracket_margin, m);
      for (Index i = 0; i < lin.size(); ++i)
        if (lin[i] < minus[i] - 1e-12 * scale || lin[i] > plus[i] + 1e-12 * scale) ++violations;
    }
    for (Extremal sign : {Extremal::plus, Extremal::minus}) {
      const Eigen::VectorXd target = sign == Extremal::plus ? plus : minus;
      const Eigen::VectorXd got =
          linear_from_integrals(k, integrals, policy_from_integrals(k, integrals, sign));
      policy_err = std::max(policy_err, (got - target).cwiseAbs().maxCoeff() / scale);
    }
    const Eigen::VectorXd neg_plus = operator_apply(op, f.scaled(-1.0), Extremal::plus);
    symmetry_err = std::max(symmetry_err, (neg_plus + minus).cwiseAbs().maxCoeff() / scale);
  }
  add_check(r, "bracket", violations == 0, bracket_margin);
  add_check(r, "policy_reproduces_extremal", policy_err <= 1e-12, 1e-12 - policy_err);
  add_check(r, "sign_symmetry", symmetry_err <= 1e-12, 1e-12 - symmetry_err);

  json d = {{"samples", e.samples},
            {"evaluations", e.evaluations},
            {"bracket_violations", violations},
            {"policy_error", policy_err},
            {"symmetry_error", symmetry_err}};
  // Barrier (1 - |x - c|^2 / R^2)_+^s: its image is constant on ball domains.
  const DomainGrid& g = *ctx.grid;
  const double R = g.extent().half_x;
  Field barrier = Field::sample(ctx.grid, [&](const Point& x) {
    const Point rel = x - g.center();
    return std::pow(std::max(0.0, 1.0 - dot(rel, rel) / (R * R)), ctx.s);
  });
  r.residual = operator_apply(op, barrier, ctx.config.problem.sign);
  if (g.kind() != DomainKind::box) {
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (norm(g.node(i) - g.center()) > e.barrier_radius * R) continue;
      lo = std::min(lo, r.residual[static_cast<Index>(i)]);
      hi = std::max(hi, r.residual[static_cast<Index>(i)]);
    }
    const double mean = 0.5 * (lo + hi);
    const double variation = (hi - lo) / std::abs(mean);
    add_check(r, "barrier_constancy", variation <= e.barrier_tol, e.barrier_tol - variation);
    d["barrier_value_mean"] = mean;
    d["barrier_relative_variation"] = variation;
  }
  r.details = d.dump();
  r.u = std::move(barrier);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::solve: return "solve";
    case Mode::eigen: return "eigen";
    case Mode::barriers: return "barriers";
    case Mode::hopf: return "hopf";
    case Mode::threshold: return "threshold";
    case Mode::sweep: return "sweep";
    case Mode::validate_operator: return "validate-operator";
  }
  return "unknown";
}

Mode mode_from_string(std::string_view name) {
  for (Mode m : {Mode::solve, Mode::eigen, Mode::barriers, Mode::hopf, Mode::threshold,
                 Mode::sweep, Mode::validate_operator})
    if (to_string(m) == name) return m;
  throw InvalidArgument("unknown mode '" + std::string(name) + "'");
}

GridPtr ScenarioConfig::make_grid() const {
  return build_grid(domain.dim, domain.kind, domain.extent, domain.h, domain.r_trunc);
}

KernelSpec ScenarioConfig::make_kernel() const {
  KernelSpec k = KernelSpec::make(domain.dim, kernel.s, kernel.lambda, kernel.Lambda,
                                  kernel.c_norm, kernel.n_dirs);
  k.radial_points = kernel.radial_points;
  return k;
}

ExteriorSpec ScenarioConfig::make_exterior() const {
  return ExteriorSpec(problem.shells, problem.far_value);
}

Eigen::VectorXd ScenarioConfig::make_weight(const DomainGrid& grid) const {
  Eigen::VectorXd a(static_cast<Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i)
    a[static_cast<Index>(i)] = problem.a.value + dot(problem.a.slope, grid.node(i) - grid.center());
  return a;
}

ScenarioConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.mark.line + 1, e.msg);
  }
  ScenarioConfig c;
  Section top(root, "", 1);
  c.id = top.get<std::string>("id", c.id);
  read_domain(top.child("domain"), c.domain);
  read_kernel(top.child("kernel"), c.domain.dim, c.kernel);
  read_problem(top.child("problem"), c.problem);
  read_solver(top.child("solver"), c.solver);
  read_experiment(top.child("experiment"), c.experiment);
  top.finish();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

bool ScenarioResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

ScenarioResult run_scenario(const ScenarioConfig& config, Mode mode) {
  const GridPtr grid = config.make_grid();
  const ExteriorSpec exterior = config.make_exterior();
  validate_exterior(*grid, exterior);
  const Context ctx{config,
                    grid,
                    std::make_shared<const NonlocalOperator>(grid, config.make_kernel()),
                    config.make_weight(*grid),
                    exterior,
                    config.kernel.s,
                    config.tol_zero(),
                    config.experiment.probe_depth_factor * grid->h()};
  ScenarioResult r;
  r.id = config.id;
  r.mode = mode;
  switch (mode) {
    case Mode::solve: run_solve(ctx, r, false); break;
    case Mode::hopf: run_solve(ctx, r, true); break;
    case Mode::eigen: run_eigen(ctx, r); break;
    case Mode::barriers: run_barriers(ctx, r); break;
    case Mode::threshold: run_threshold(ctx, r); break;
    case Mode::sweep: run_sweep(ctx, r); break;
    case Mode::validate_operator: run_validate_operator(ctx, r); break;
  }
  return r;
}

std::string summary_json(const ScenarioResult& result, const ScenarioConfig& config) {
  if (!result.u) throw InvalidArgument("scenario result carries no field");
  const Field& u = *result.u;
  const double s = config.kernel.s;
  const SmpReport smp =
      smp_check(u, s, config.tol_zero(), config.experiment.probe_depth_factor * u.grid().h());
  json j;
  j["id"] = result.id;
  j["mode"] = std::string(to_string(result.mode));
  j["min_u"] = u.min();
  j["max_u"] = u.max();
  j["l1s_neg"] = l1s_norm(u.negative_part(), s);
  j["residual"] = result.residual.size() ? result.residual.cwiseAbs().maxCoeff() : 0.0;
  if (result.lambda1) j["lambda1"] = *result.lambda1;
  j["dead_core_count"] = smp.dead_core.size();
  j["hopf_min_quotient"] = smp.hopf_min;
  if (result.m_star) j["m_star"] = *result.m_star;
  j["checks"] = json::array();
  for (const Check& c : result.checks)
    j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}});
  j["details"] = result.details.empty() ? json::object() : json::parse(result.details);
  return j.dump(2) + "\n";
}

std::string solution_csv(const ScenarioResult& result) {
  if (!result.u) throw InvalidArgument("scenario result carries no field");
  const Field& u = *result.u;
  const DomainGrid& g = u.grid();
  std::string out = g.dim() == 1 ? "x,u,d,residual\n" : "x,y,u,d,residual\n";
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto idx = static_cast<Index>(i);
    out += format_double(g.node(i)[0]) + ",";
    if (g.dim() == 2) out += format_double(g.node(i)[1]) + ",";
    out += format_double(u.values()[idx]) + "," + format_double(g.distance(i)) + ",";
    out += format_double(result.residual.size() ? result.residual[idx] : 0.0) + "\n";
  }
  return out;
}

void write_outputs(const ScenarioResult& result, const ScenarioConfig& config,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto write = [&](const char* name, const std::string& body) {
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (out_dir / name).string());
    out << body;
  };
  write("solution.csv", solution_csv(result));
  write("summary.json", summary_json(result, config));
}

int exit_code(const ScenarioResult& result) { return result.passed() ? 0 : 2; }

}  // namespace pucci

// SPDX-License-Identifier: Apache-2.0
#include "pucci/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>

#include "pucci/errors.hpp"

namespace pucci {

namespace {

using Index = Eigen::Index;

// Divergence: residual rising for this many consecutive steps while above
// kInstabilityGrowth times its initial value.
constexpr int kInstabilityWindow = 100;
constexpr double kInstabilityGrowth = 10.0;

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Eigen::VectorXd reaction(const Problem& p, const Eigen::VectorXd& u) {
  Eigen::VectorXd out(u.size());
  const bool half = p.q == 0.5;
  for (Index i = 0; i < u.size(); ++i) {
    const double pos = std::max(u[i], 0.0);
    out[i] = p.weight_a[i] * (half ? std::sqrt(pos) : std::pow(pos, p.q));
  }
  return out;
}

Eigen::VectorXd residual_with(const Problem& p, const ExteriorTerms& b, const Eigen::VectorXd& u) {
  const NonlocalOperator& op = *p.op;
  return extremal_from_integrals(op.kernel(), op.directional_integrals(u, b), p.sign) +
         reaction(p, u);
}

struct HowardState {
  Eigen::VectorXd u;
  PolicyField mu;
  int outer = 0;
  bool cycle = false;
  double residual = 0.0;
  std::vector<Eigen::VectorXd> iterates{};
};

HowardState howard(const NonlocalOperator& op, Extremal sign, const Eigen::VectorXd& rhs,
                   const ExteriorTerms& b, const SolverConfig& cfg, const PolicyField* warm) {
  const KernelSpec& k = op.kernel();
  const auto n = static_cast<Index>(op.size());
  if (rhs.size() != n) throw InvalidArgument("right-hand side does not match the grid");
  if (!rhs.allFinite()) throw InvalidArgument("right-hand side must be finite");

  HowardState st{Eigen::VectorXd::Zero(n), PolicyField(op.size(), op.num_directions(), k.lambda)};
  st.mu = warm ? *warm : policy_from_integrals(k, op.directional_integrals(st.u, b), sign);
  const double scale = std::max(1.0, max_abs(rhs));

  Eigen::VectorXd best_u;
  double best_res = std::numeric_limits<double>::infinity();
  for (st.outer = 1; st.outer <= cfg.policy_max_outer; ++st.outer) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(op.linear_matrix(st.mu));
    if (!(lu.rcond() > 1e-14)) throw SingularSystem("policy system is numerically singular");
    st.u = lu.solve(rhs - op.linear_offset(st.mu, b));
    if (!st.u.allFinite()) throw SingularSystem("policy solve produced non-finite values");
    st.iterates.push_back(st.u);

    const Eigen::MatrixXd I = op.directional_integrals(st.u, b);
    st.residual = max_abs(extremal_from_integrals(k, I, sign) - rhs);
    if (st.residual < best_res) {
      best_res = st.residual;
      best_u = st.u;
    }
    PolicyField next = policy_from_integrals(k, I, sign);
    if (next == st.mu || st.residual <= 1e-13 * scale) return st;
    st.mu = std::move(next);
  }
  st.outer = cfg.policy_max_outer;
  st.cycle = true;
  st.u = best_u;
  st.residual = best_res;
  return st;
}

Field embed_ball(const DomainGrid& domain, const DomainGrid& ball, int ci, int cj,
                 const Eigen::VectorXd& values, GridPtr target) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Index>(domain.size()));
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const auto l = domain.lattice(i);
    const int b = ball.node_at(l[0] - ci, l[1] - cj);
    if (b >= 0) out[static_cast<Index>(i)] = values[b];
  }
  return Field(std::move(target), std::move(out), ExteriorSpec::constant(0.0));
}

}  // namespace

// ---------------------------------------------------------------------------
// Problem and configuration

Problem Problem::make(OperatorPtr op, Extremal sign, Eigen::VectorXd weight_a, double q,
                      ExteriorSpec exterior) {
  Problem p{std::move(op), sign, std::move(weight_a), q, std::move(exterior)};
  p.validate();
  return p;
}

Problem Problem::make(OperatorPtr op, Extremal sign, double a, double q, ExteriorSpec exterior) {
  if (!op) throw InvalidArgument("problem needs an operator");
  const auto n = static_cast<Index>(op->size());
  return make(std::move(op), sign, Eigen::VectorXd::Constant(n, a), q, std::move(exterior));
}

void Problem::validate() const {
  if (!op) throw InvalidArgument("problem needs an operator");
  if (static_cast<std::size_t>(weight_a.size()) != op->size())
    throw InvalidArgument("weight a does not match the grid");
  if (!weight_a.allFinite()) throw InvalidArgument("weight a must be finite");
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("exponent q must lie in (0, 1)");
  validate_exterior(op->grid(), exterior);
}

void SolverConfig::validate() const {
  if (!(tau_factor > 0.0 && tau_factor <= 1.0)) throw InvalidArgument("tau_factor must lie in (0, 1]");
  if (!(tol_residual > 0.0)) throw InvalidArgument("tol_residual must be positive");
  if (max_iter <= 0) throw InvalidArgument("max_iter must be positive");
  if (policy_max_outer <= 0) throw InvalidArgument("policy_max_outer must be positive");
}

// ---------------------------------------------------------------------------
// Solvers

Eigen::VectorXd residual(const Problem& p, const Field& u) {
  p.validate();
  return residual_with(p, p.op->exterior_terms(u.exterior()), u.values());
}

SolveResult pseudo_time_solve(const Problem& p, const SolverConfig& cfg) {
  return pseudo_time_solve(p, cfg, Field::zeros(p.grid_ptr(), p.exterior));
}

SolveResult pseudo_time_solve(const Problem& p, const SolverConfig& cfg, const Field& init) {
  p.validate();
  cfg.validate();
  if (init.values().size() != static_cast<Index>(p.op->size()))
    throw InvalidArgument("initial field does not match the grid");
  const double tau = cfg.tau_factor / p.op->diagonal_bound();
  const ExteriorTerms b = p.op->exterior_terms(p.exterior);

  SolveResult out{Field(p.grid_ptr(), init.values(), p.exterior), {}};
  Eigen::VectorXd u = init.values();
  int rising = 0;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    const Eigen::VectorXd r = residual_with(p, b, u);
    const double res = max_abs(r);
    if (!std::isfinite(res)) throw Instability("non-finite residual", std::move(out.history));
    out.history.push_back(res);
    if (res <= cfg.tol_residual) {
      out.u = Field(p.grid_ptr(), std::move(u), p.exterior);
      out.residual = res;
      out.iterations = it;
      return out;
    }
    if (it >= cfg.max_iter)
      throw NonConvergence("pseudo-time iteration hit max_iter with residual " + std::to_string(res),
                           std::move(out.history));
    rising = res > previous ? rising + 1 : 0;
    if (rising >= kInstabilityWindow && res > kInstabilityGrowth * out.history.front())
      throw Instability("residual grew over 100 consecutive steps", std::move(out.history));
    previous = res;
    u += tau * r;
  }
}

PolicyResult policy_iteration_solve(const NonlocalOperator& op, Extremal sign,
                                    const Eigen::VectorXd& rhs, const ExteriorSpec& exterior,
                                    const SolverConfig& cfg) {
  cfg.validate();
  validate_exterior(op.grid(), exterior);
  HowardState st = howard(op, sign, rhs, op.exterior_terms(exterior), cfg, nullptr);
  return {Field(op.grid_ptr(), std::move(st.u), exterior), st.outer, st.cycle, st.residual,
          std::move(st.iterates)};
}

EigenPair principal_eigenpair(const NonlocalOperator& op, Extremal sign, const SolverConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Index>(op.size());
  const ExteriorSpec zero = ExteriorSpec::constant(0.0);
  const ExteriorTerms b = op.exterior_terms(zero);
  Eigen::VectorXd phi = Eigen::VectorXd::Ones(n);
  PolicyField mu(op.size(), op.num_directions(), op.kernel().lambda);
  std::vector<double> history;
  bool warm = false;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    HowardState st = howard(op, sign, -phi, b, cfg, warm ? &mu : nullptr);
    mu = st.mu;
    warm = true;
    const double top = st.u.maxCoeff();
    if (!(top > 0.0)) throw NonConvergence("inverse iteration lost positivity", std::move(history));
    const double lambda = 1.0 / top;
    phi = st.u / top;
    const double res = max_abs(
        extremal_from_integrals(op.kernel(), op.directional_integrals(phi, b), sign) + lambda * phi);
    history.push_back(res);
    if (res <= cfg.tol_residual)
      return {lambda, Field(op.grid_ptr(), std::move(phi), zero), res, it};
  }
  throw NonConvergence("inverse iteration hit max_iter", std::move(history));
}

Supersolution supersolution(const Problem& p, const SolverConfig& cfg) {
  p.validate();
  const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(static_cast<Index>(p.grid().size()),
                                                        -p.weight_a.cwiseAbs().maxCoeff());
  // Psi takes g^+ outside: kPsi with exterior g <= k g^+ stays a supersolution.
  const PolicyResult psi =
      policy_iteration_solve(*p.op, p.sign, rhs, p.exterior.positive_part(), cfg);
  Supersolution out{Field(p.grid_ptr(), psi.u.values(), p.exterior), 0.0, 0.0};
  out.psi_sup = psi.u.values().maxCoeff();
  out.k = std::max(1.0, std::pow(std::max(out.psi_sup, 0.0), p.q / (1.0 - p.q)));
  out.upper.values() *= out.k;
  return out;
}

SandwichResult existence_sandwich(const Problem& p, const SolverConfig& cfg) {
  p.validate();
  cfg.validate();
  const DomainGrid& g = p.grid();
  const NonlocalOperator& op = *p.op;
  const Eigen::VectorXd& a = p.weight_a;
  if (!(a.maxCoeff() > 0.0)) throw EmptyPositivitySet("weight a has no positive node");

  SandwichCertificate cert;
  Field lower = Field::zeros(p.grid_ptr());
  if (a.minCoeff() > 0.0) {
    cert.ball_is_domain = true;
    cert.ball_center = g.center();
    cert.ball_radius = g.inradius();
    cert.a0 = a.minCoeff();
    const EigenPair ep = principal_eigenpair(op, p.sign, cfg);
    cert.lambda1 = ep.lambda1;
    cert.epsilon = std::pow(cert.a0 / cert.lambda1, 1.0 / (1.0 - p.q));
    lower = ep.phi1.scaled(cert.epsilon);
  } else {
    // Largest node-centered ball inside Omega whose nodes all carry a > 0.
    std::size_t best = 0;
    double best_radius = -1.0;
    for (std::size_t c = 0; c < g.size(); ++c) {
      if (!(a[static_cast<Index>(c)] > 0.0)) continue;
      double radius = g.distance(c);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!(a[static_cast<Index>(i)] > 0.0)) radius = std::min(radius, norm(g.node(i) - g.node(c)));
      if (radius > best_radius) {
        best_radius = radius;
        best = c;
      }
    }
    if (!(best_radius > 2.0 * g.h()))
      throw EmptyPositivitySet("positivity set of a is too thin to hold a grid ball");
    const DomainKind kind = g.dim() == 1 ? DomainKind::interval : DomainKind::disk;
    GridPtr ball = build_grid(g.dim(), kind, {best_radius, best_radius, g.node(best)}, g.h(),
                              g.r_trunc());
    NonlocalOperator ball_op(ball, op.kernel());
    const EigenPair ep = principal_eigenpair(ball_op, p.sign, cfg);
    cert.ball_center = g.node(best);
    cert.ball_radius = best_radius;
    cert.a0 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (norm(g.node(i) - g.node(best)) < best_radius)
        cert.a0 = std::min(cert.a0, a[static_cast<Index>(i)]);
    cert.lambda1 = ep.lambda1;
    cert.epsilon = std::pow(cert.a0 / cert.lambda1, 1.0 / (1.0 - p.q));
    const auto l = g.lattice(best);
    lower = embed_ball(g, *ball, l[0], l[1], cert.epsilon * ep.phi1.values(), p.grid_ptr());
  }

  Supersolution super = supersolution(p, cfg);
  cert.psi_sup = super.psi_sup;
  cert.k = super.k;
  Field upper = std::move(super.upper);

  SolveResult sol = pseudo_time_solve(p, cfg, upper);
  cert.residual = sol.residual;
  cert.iterations = sol.iterations;
  cert.lower_margin = (sol.u.values() - lower.values()).minCoeff();
  cert.upper_margin = (upper.values() - sol.u.values()).minCoeff();
  cert.sandwich_violation =
      cert.lower_margin < -cfg.tol_residual || cert.upper_margin < -cfg.tol_residual;
  return {std::move(sol.u), std::move(lower), std::move(upper), cert};
}

}  // namespace pucci

// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include "pucci/errors.hpp"
#include "pucci/nonlocal_operator.hpp"

using namespace pucci;

namespace {

GridPtr interval(double h) { return build_grid(1, DomainKind::interval, {1.0, 0.0, {}}, h, 10.0); }
GridPtr disk(double h) { return build_grid(2, DomainKind::disk, {1.0, 1.0, {}}, h, 10.0); }

// C^3 bump (1 - (x / 0.6)^2)^4 supported in (-0.6, 0.6); a polynomial of
// degree 8 inside its support.
constexpr double kSupport = 0.6;

double bump_derivative(double x, int order) {
  // Coefficients of x^{2k}: binom(4, k) (-1)^k / 0.6^{2k}.
  const double binom[5] = {1, 4, 6, 4, 1};
  double total = 0.0;
  for (int k = 0; k <= 4; ++k) {
    const int power = 2 * k;
    if (power < order) continue;
    double falling = 1.0;
    for (int m = 0; m < order; ++m) falling *= power - m;
    total += binom[k] * ((k % 2) ? -1.0 : 1.0) * std::pow(kSupport, -power) * falling *
             std::pow(x, power - order);
  }
  return total;
}

double bump(double x) { return std::abs(x) < kSupport ? bump_derivative(x, 0) : 0.0; }

// int_0^inf (f(x+r) + f(x-r) - 2 f(x)) r^{-1-2s} dr. While x +- r stays in the
// support the second difference is the even Taylor polynomial and integrates
// in closed form; the rest uses tanh-sinh quadrature and a closed-form tail.
double bump_integral_oracle(double x, double s) {
  const double inner = kSupport - std::abs(x);
  const double reach = kSupport + std::abs(x);
  double total = 0.0;
  double factorial = 1.0;
  for (int m = 1; m <= 4; ++m) {
    factorial *= (2 * m - 1) * (2 * m);
    total += 2.0 * bump_derivative(x, 2 * m) / factorial * std::pow(inner, 2 * m - 2 * s) /
             (2 * m - 2 * s);
  }
  boost::math::quadrature::tanh_sinh<double> ts;
  const auto f = [&](double r) {
    return (bump(x + r) + bump(x - r) - 2.0 * bump(x)) * std::pow(r, -1.0 - 2.0 * s);
  };
  total += ts.integrate(f, inner, reach);
  return total - 2.0 * bump(x) * std::pow(reach, -2.0 * s) / (2.0 * s);
}

// Largest error relative to the largest exact value.
double max_bump_error(double h, double s) {
  const GridPtr g = interval(h);
  const NonlocalOperator op(g, KernelSpec::make(1, s, 1.0, 1.0));
  const Field f = Field::sample(g, [](const Point& p) { return bump(p[0]); });
  double err = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < g->size(); i += 4) {
    if (std::abs(g->node(i)[0]) > 0.5) continue;
    const double exact = bump_integral_oracle(g->node(i)[0], s);
    err = std::max(err, std::abs(directional_integral(op, f, i, 0) - exact));
    scale = std::max(scale, std::abs(exact));
  }
  return err / scale;
}

}  // namespace

TEST_SUITE("nonlocal_operator") {
  TEST_CASE("normalization constants") {
    CHECK(fractional_laplacian_constant(1, 0.5) == doctest::Approx(1.0 / std::numbers::pi));
    CHECK(fractional_laplacian_constant(2, 0.5) ==
          doctest::Approx(1.0 / (2.0 * std::numbers::pi)));
    CHECK(normalization(NormalizationPreset::one_minus_s, 1, 0.25) == 0.75);
    CHECK(normalization(NormalizationPreset::unit, 2, 0.25) == 1.0);
    CHECK(normalization(normalization_preset_from_string("fractional_laplacian"), 2, 0.5) ==
          doctest::Approx(fractional_laplacian_constant(2, 0.5)));
    CHECK_THROWS_AS(normalization_preset_from_string("other"), InvalidArgument);
  }

  TEST_CASE("direction quadrature covers the half circle") {
    const KernelSpec k1 = KernelSpec::make(1, 0.5, 1.0, 2.0);
    REQUIRE(k1.directions.size() == 1);
    CHECK(k1.directions[0].weight == 1.0);
    const KernelSpec k2 = KernelSpec::make(2, 0.5, 1.0, 2.0, 1.0, 16);
    REQUIRE(k2.directions.size() == 16);
    double total = 0.0;
    for (const Direction& d : k2.directions) {
      total += d.weight;
      CHECK(norm(d.theta) == doctest::Approx(1.0));
    }
    CHECK(total == doctest::Approx(std::numbers::pi));
  }

  TEST_CASE("kernel validation") {
    CHECK_THROWS_AS(KernelSpec::make(1, 0.0, 1.0, 1.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(KernelSpec::make(1, 1.0, 1.0, 1.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(KernelSpec::make(1, 0.5, 2.0, 1.0).validate(), InvalidArgument);
    CHECK_THROWS_AS(KernelSpec::make(1, 0.5, 0.0, 1.0).validate(), InvalidArgument);
    CHECK_NOTHROW(KernelSpec::make(2, 0.5, 1.0, 3.0).validate());
  }

  TEST_CASE("directional integral of a smooth bump matches adaptive quadrature") {
    for (double s : {0.25, 0.5, 0.75}) {
      CAPTURE(s);
      const double coarse = max_bump_error(1.0 / 64.0, s);
      const double fine = max_bump_error(1.0 / 256.0, s);
      // Consistency of order 2 - 2s: four halvings of h gain 4^{2-2s}, less slack.
      CHECK(fine < coarse * std::pow(4.0, -(2.0 - 2.0 * s)) * 2.0);
      CHECK(fine < 0.01);
    }
  }

  TEST_CASE("exterior shells are integrated in closed form") {
    const double s = 0.5;
    const GridPtr g = interval(1.0 / 64.0);
    const NonlocalOperator op(g, KernelSpec::make(1, s, 1.0, 1.0));
    // Zero trace keeps the interior interpolant at zero.
    const Field f = Field::zeros(g, ExteriorSpec({{1.0, 2.0, 0.0}, {2.0, 3.0, 5.0}}, 0.0));
    const auto piece = [&](double a, double b) {
      return (std::pow(a, -2.0 * s) - std::pow(b, -2.0 * s)) / (2.0 * s);
    };
    for (std::size_t i = 0; i < g->size(); i += 7) {
      const double x = g->node(i)[0];
      const double expected = 5.0 * (piece(2.0 - x, 3.0 - x) + piece(2.0 + x, 3.0 + x));
      CHECK(directional_integral(op, f, i, 0) == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  TEST_CASE("constants are annihilated") {
    for (const GridPtr& g : {interval(1.0 / 64.0), disk(1.0 / 16.0)}) {
      const NonlocalOperator op(g, KernelSpec::make(g->dim(), 0.4, 1.0, 3.0));
      const Field c(g, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g->size()), 2.5),
                    ExteriorSpec::constant(2.5));
      for (Extremal sign : {Extremal::plus, Extremal::minus})
        CHECK(operator_apply(op, c, sign).cwiseAbs().maxCoeff() < 1e-11);
    }
  }

  TEST_CASE("fractional Laplacian of the s-barrier is constant") {
    // (1 - |x|^2)_+^s has constant image -4^s Gamma(1 + s) Gamma(n/2 + s) / Gamma(n/2).
    const double s = 0.5;
    {
      const GridPtr g = interval(1.0 / 256.0);
      const NonlocalOperator op(
          g, KernelSpec::make(1, s, 1.0, 1.0, fractional_laplacian_constant(1, s)));
      const Field f = Field::sample(g, [&](const Point& p) { return std::pow(1.0 - p[0] * p[0], s); });
      const Eigen::VectorXd v = operator_apply(op, f, Extremal::plus);
      for (std::size_t i = 0; i < g->size(); ++i)
        if (std::abs(g->node(i)[0]) <= 0.9)
          CHECK(v[static_cast<Eigen::Index>(i)] == doctest::Approx(-std::tgamma(1.0 + 2.0 * s)).epsilon(0.02));
    }
    {
      const GridPtr g = disk(1.0 / 32.0);
      const NonlocalOperator op(
          g, KernelSpec::make(2, s, 1.0, 1.0, fractional_laplacian_constant(2, s)));
      const Field f = Field::sample(g, [&](const Point& p) { return std::pow(1.0 - dot(p, p), s); });
      const Eigen::VectorXd v = operator_apply(op, f, Extremal::plus);
      const double expected = -std::pow(4.0, s) * std::tgamma(1.0 + s) * std::tgamma(1.0 + s);
      for (std::size_t i = 0; i < g->size(); ++i)
        if (norm(g->node(i)) <= 0.8)
          CHECK(v[static_cast<Eigen::Index>(i)] == doctest::Approx(expected).epsilon(0.05));
    }
  }

  TEST_CASE("extremal operators bracket linear ones and policies attain them") {
    const GridPtr g = disk(1.0 / 16.0);
    const KernelSpec k = KernelSpec::make(2, 0.6, 0.5, 2.0);
    const NonlocalOperator op(g, k);
    const Field f = Field::sample(g, [](const Point& p) { return std::sin(3.0 * p[0]) * p[1]; },
                                  ExteriorSpec({{1.0, 2.0, 0.3}}, -0.2));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> mu(k.lambda, k.Lambda);
    PolicyField random(g->size(), k.directions.size(), 1.0);
    for (std::size_t i = 0; i < g->size(); ++i)
      for (std::size_t j = 0; j < k.directions.size(); ++j) random(i, j) = mu(rng);
    const PolicyField best_plus = optimal_policy(op, f, Extremal::plus);
    const PolicyField best_minus = optimal_policy(op, f, Extremal::minus);
    for (std::size_t i = 0; i < g->size(); i += 5) {
      const double hi = eval_extremal(op, f, i, Extremal::plus);
      const double lo = eval_extremal(op, f, i, Extremal::minus);
      const double lin = eval_linear(op, f, i, random);
      CHECK(lo <= lin + 1e-12);
      CHECK(lin <= hi + 1e-12);
      CHECK(eval_linear(op, f, i, best_plus) == doctest::Approx(hi).epsilon(1e-12));
      CHECK(eval_linear(op, f, i, best_minus) == doctest::Approx(lo).epsilon(1e-12));
    }
    PolicyField outside(g->size(), k.directions.size(), 3.0);
    CHECK_THROWS_AS(eval_linear(op, f, 0, outside), InvalidArgument);
  }

  TEST_CASE("linear matrix and offset reproduce the linear operator") {
    const GridPtr g = interval(1.0 / 32.0);
    const NonlocalOperator op(g, KernelSpec::make(1, 0.3, 1.0, 2.0));
    const ExteriorSpec ext({{1.0, 2.0, 1.0}}, -1.0);
    const Field f = Field::sample(g, [](const Point& p) { return std::cos(2.0 * p[0]); }, ext);
    const PolicyField mu = optimal_policy(op, f, Extremal::minus);
    const Eigen::VectorXd direct = operator_apply(op, f, Extremal::minus);
    const Eigen::VectorXd assembled =
        op.linear_matrix(mu) * f.values() + op.linear_offset(mu, op.exterior_terms(ext));
    CHECK((direct - assembled).cwiseAbs().maxCoeff() < 1e-10);
    // Monotone scheme: negative diagonal, nonnegative off-diagonal entries.
    const Eigen::MatrixXd A = op.direction_matrix(0);
    for (Eigen::Index i = 0; i < A.rows(); ++i)
      for (Eigen::Index j = 0; j < A.cols(); ++j) {
        if (i == j)
          CHECK(A(i, j) < 0.0);
        else
          CHECK(A(i, j) >= 0.0);
      }
    CHECK(op.diagonal_bound() > 0.0);
  }

  TEST_CASE("diverging exterior growth is rejected") {
    const GridPtr g = interval(1.0 / 16.0);
    const NonlocalOperator op(g, KernelSpec::make(1, 0.25, 1.0, 1.0));
    const ExteriorSpec ext({{1.0, 2.0, 0.0}}, 1.0, TailGrowth{1.0, 0.6});
    CHECK_THROWS_AS(op.exterior_terms(ext), NonFiniteResult);
  }
}

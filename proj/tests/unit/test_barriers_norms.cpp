// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>
#include <json.hpp>

#include "pucci/barriers_norms.hpp"
#include "pucci/errors.hpp"

using namespace pucci;

namespace {

GridPtr interval(double h) { return build_grid(1, DomainKind::interval, {1.0, 0.0, {}}, h, 10.0); }
GridPtr disk(double h) { return build_grid(2, DomainKind::disk, {1.0, 1.0, {}}, h, 10.0); }

double weight(double r, int dim, double s) { return 1.0 / (1.0 + std::pow(r, dim + 2.0 * s)); }

}  // namespace

TEST_SUITE("barriers_norms") {
  TEST_CASE("exterior norm of the unit constant in one dimension is pi / 2 at s = 1/2") {
    // 2 int_1^inf dx / (1 + x^2) = 2 (pi/2 - atan 1).
    const GridPtr g = interval(1.0 / 64.0);
    const double expected = 2.0 * (std::numbers::pi / 2.0 - std::atan(1.0));
    CHECK(l1s_norm_exterior(*g, ExteriorSpec::constant(1.0), 0.5) ==
          doctest::Approx(expected).epsilon(1e-10));
    CHECK(expected == doctest::Approx(std::numbers::pi / 2.0));
  }

  TEST_CASE("exterior norms match adaptive quadrature") {
    boost::math::quadrature::exp_sinh<double> tail;
    boost::math::quadrature::tanh_sinh<double> finite;
    for (double s : {0.25, 0.5, 0.75}) {
      CAPTURE(s);
      const ExteriorSpec ext({{1.0, 2.0, 3.0}, {2.0, 4.0, -1.5}}, 0.5);
      const auto piece = [&](int dim) {
        const auto f = [&](double r) { return weight(r, dim, s) * (dim == 2 ? r : 1.0); };
        const double sphere = dim == 1 ? 2.0 : 2.0 * std::numbers::pi;
        return sphere * (3.0 * finite.integrate(f, 1.0, 2.0) + 1.5 * finite.integrate(f, 2.0, 4.0) +
                         0.5 * tail.integrate(f, 4.0, std::numeric_limits<double>::infinity()));
      };
      CHECK(l1s_norm_exterior(*interval(1.0 / 32.0), ext, s) ==
            doctest::Approx(piece(1)).epsilon(1e-9));
      CHECK(l1s_norm_exterior(*disk(1.0 / 8.0), ext, s) ==
            doctest::Approx(piece(2)).epsilon(1e-6));
    }
  }

  TEST_CASE("interior norms of 1 - |x|^2 converge to the integral") {
    boost::math::quadrature::tanh_sinh<double> q;
    const double s = 0.5;
    const double exact1 =
        2.0 * q.integrate([&](double x) { return (1.0 - x * x) * weight(x, 1, s); }, 0.0, 1.0);
    const GridPtr g1 = interval(1.0 / 256.0);
    const Field f1 = Field::sample(g1, [](const Point& p) { return 1.0 - p[0] * p[0]; });
    CHECK(l1s_norm(f1, s) == doctest::Approx(exact1).epsilon(1e-4));
    // Sign-changing integrand: |.| is handled piecewise.
    const Field f1n = Field::sample(g1, [](const Point& p) { return std::sin(std::numbers::pi * p[0]); });
    const double exact1n = 2.0 * q.integrate(
                                     [&](double x) { return std::sin(std::numbers::pi * x) * weight(x, 1, s); },
                                     0.0, 1.0);
    CHECK(l1s_norm(f1n, s) == doctest::Approx(exact1n).epsilon(1e-3));

    const double exact2 = 2.0 * std::numbers::pi *
                          q.integrate([&](double r) { return (1.0 - r * r) * weight(r, 2, s) * r; },
                                      0.0, 1.0);
    const GridPtr g2 = disk(1.0 / 64.0);
    const Field f2 = Field::sample(g2, [](const Point& p) { return 1.0 - dot(p, p); });
    CHECK(l1s_norm(f2, s) == doctest::Approx(exact2).epsilon(2e-3));
  }

  TEST_CASE("norm is additive over interior and exterior for a constant") {
    const GridPtr g = interval(1.0 / 128.0);
    const Field c(g, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g->size()), 2.0),
                  ExteriorSpec::constant(2.0));
    boost::math::quadrature::tanh_sinh<double> q;
    const double inside = 2.0 * 2.0 * q.integrate([](double x) { return weight(x, 1, 0.5); }, 0.0, 1.0);
    CHECK(l1s_norm(c, 0.5) ==
          doctest::Approx(inside + l1s_norm_exterior(*g, c.exterior(), 0.5)).epsilon(1e-8));
  }

  TEST_CASE("distance powers") {
    CHECK(rho1({0.0, 0.0}, 0.5) == doctest::Approx(1.0));
    CHECK(rho1({0.75, 0.0}, 0.5) == doctest::Approx(0.5));
    CHECK(rho2({0.75, 0.0}, 0.5) == doctest::Approx(std::pow(0.25, 0.75)));
    CHECK(rho1({0.6, 0.8}, 0.3) == 0.0);
    CHECK(rho2({2.0, 0.0}, 0.3) == 0.0);
  }

  TEST_CASE("phi is normalized, supported in the unit ball and largest at the center") {
    const PhiBarrier phi(0.5, 8, 2.0);
    CHECK(phi.c() == doctest::Approx(1.0 / (2.0 * 256.0)));
    CHECK(phi({0.0, 0.0}) == doctest::Approx(1.0));
    CHECK(phi({1.0, 0.0}) == 0.0);
    CHECK(phi({0.0, -1.5}) == 0.0);
    for (double r = 0.0; r < 0.5; r += 0.01) CHECK(phi({r, 0.0}) <= 1.0 + 1e-15);
    for (double r = 0.0; r < 1.0; r += 0.01) CHECK(phi({0.0, r}) >= phi.c() * rho1({0.0, r}, 0.5) - 1e-15);
    CHECK_THROWS_AS(PhiBarrier(1.0, 8, 2.0), InvalidArgument);
    CHECK_THROWS_AS(PhiBarrier(0.5, 0, 2.0), InvalidArgument);
    CHECK_THROWS_AS(PhiBarrier(0.5, 8, 1.0), InvalidArgument);
  }

  TEST_CASE("build_phi reports its four inequality lines") {
    const GridPtr g = interval(1.0 / 128.0);
    const NonlocalOperator op(g, KernelSpec::make(1, 0.5, 1.0, 2.0, 0.5));
    const PhiResult r = build_phi(op, 0.0);
    for (const char* line : {"lower_bound", "upper_bound", "exterior_zero"})
      CHECK(r.report.violations(line) == 0);
    CHECK(r.report.min_slack("subsolution") < std::numeric_limits<double>::infinity());
    CHECK(r.report.parameter("epsilon") > 0.0);
    const auto j = nlohmann::json::parse(r.report.to_json());
    CHECK(j["margins"].size() == r.report.margins().size());
    CHECK_THROWS_AS(r.report.parameter("missing"), InvalidArgument);

    const GridPtr off = build_grid(1, DomainKind::interval, {1.0, 0.0, {0.5, 0.0}}, 1.0 / 32.0, 10.0);
    CHECK_THROWS_AS(build_phi(NonlocalOperator(off, op.kernel()), 0.0), InvalidArgument);
    CHECK_THROWS_AS(build_phi(op, -1.0), InvalidArgument);
  }

  TEST_CASE("psi_r dominates the scaled distance power on its ball") {
    const GridPtr g = disk(1.0 / 16.0);
    const PhiBarrier phi(0.5, 8, 2.0);
    const PsiResult r = psi_r(phi, g, {0.2, -0.1}, 0.5, 3.0);
    CHECK(r.report.violations("lower_bound") == 0);
    CHECK(r.field.min() >= 0.0);
    CHECK(r.field.max() <= 3.0 + 1e-12);
  }

  TEST_CASE("barrier report bookkeeping") {
    BarrierReport rep("demo");
    rep.set_parameter("a", 1.0);
    rep.set_parameter("a", 2.0);
    CHECK(rep.parameters().size() == 1);
    CHECK(rep.parameter("a") == 2.0);
    rep.append("line", {0.0, 0.0}, 1.0, 0.5);
    rep.append("line", {0.1, 0.0}, 0.4, 0.5);
    CHECK(rep.min_slack("line") == doctest::Approx(-0.1));
    CHECK(rep.violations("line") == 1);
    CHECK(rep.min_slack("none") == std::numeric_limits<double>::infinity());
  }

  TEST_CASE("negative-part constant and the Hopf condition") {
    // (1 - s)(d0^{-(n + 2s)} + 2^{n + 2s}) Lambda with d0 = 1/2, s = 1/2, n = 1, Lambda = 2.
    CHECK(negpart_bound_constant(0.5, 0.5, 1, 2.0) == doctest::Approx(8.0));
    CHECK_THROWS_AS(negpart_bound_constant(0.0, 0.5, 1, 2.0), InvalidArgument);
    const HopfCheck yes = hopf_condition_check(8.0, 0.01, 1.0, 0.25, 0.5, 0.1);
    CHECK(yes.holds);
    CHECK(yes.margin == doctest::Approx(0.4 - 0.08));
    CHECK_FALSE(hopf_condition_check(8.0, 1.0, 1.0, 0.25, 0.5, 0.1).holds);
  }

  TEST_CASE("negative parts far away are controlled by their weighted norm") {
    // Small instance of the acceptance check: S = B_{1/2}, f^- carried by shells outside B_1.
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int dim : {1, 2}) {
      const double s = 0.5, Lambda = 2.0;
      const GridPtr g = dim == 1 ? interval(1.0 / 64.0) : disk(1.0 / 16.0);
      const NonlocalOperator op(g, KernelSpec::make(dim, s, 1.0, Lambda, 1.0 - s));
      const double C = negpart_bound_constant(0.5, s, dim, Lambda);
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<Shell> shells;
        double r = 1.0;
        for (int k = 0; k < 3; ++k) {
          const double next = r + 0.2 + 2.0 * unit(rng);
          shells.push_back({r, next, -5.0 * unit(rng)});
          r = next;
        }
        const ExteriorSpec neg = ExteriorSpec(shells, 0.0).negative_part();
        const Field fm = Field::zeros(g, neg);
        const Eigen::VectorXd m = operator_apply(op, fm, Extremal::plus);
        const double bound = C * l1s_norm_exterior(*g, neg, s);
        for (std::size_t i = 0; i < g->size(); ++i)
          if (norm(g->node(i)) <= 0.5) CHECK(m[static_cast<Eigen::Index>(i)] <= bound);
      }
    }
  }
}

// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <memory>

#include <benchmark/benchmark.h>

#include "pucci/nonlocal_operator.hpp"
#include "pucci/solvers.hpp"

using namespace pucci;

namespace {

GridPtr grid_for(int dim, int inverse_h) {
  const double h = 1.0 / inverse_h;
  return dim == 1 ? build_grid(1, DomainKind::interval, {1.0, 0.0, {}}, h, 10.0)
                  : build_grid(2, DomainKind::disk, {1.0, 1.0, {}}, h, 10.0);
}

void BM_OperatorBuild(benchmark::State& state) {
  const GridPtr g = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const KernelSpec k = KernelSpec::make(g->dim(), 0.5, 1.0, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(NonlocalOperator(g, k));
  state.counters["nodes"] = static_cast<double>(g->size());
}
BENCHMARK(BM_OperatorBuild)->Args({1, 256})->Args({1, 1024})->Args({2, 16})->Args({2, 32});

void BM_OperatorApply(benchmark::State& state) {
  const GridPtr g = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const NonlocalOperator op(g, KernelSpec::make(g->dim(), 0.5, 1.0, 2.0));
  const Field f = Field::sample(g, [](const Point& p) { return std::cos(p[0]) * (1.0 - dot(p, p)); });
  for (auto _ : state) benchmark::DoNotOptimize(operator_apply(op, f, Extremal::minus));
  state.counters["nodes"] = static_cast<double>(g->size());
}
BENCHMARK(BM_OperatorApply)->Args({1, 256})->Args({1, 1024})->Args({2, 16})->Args({2, 32});

void BM_PolicySolve(benchmark::State& state) {
  const GridPtr g = grid_for(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const NonlocalOperator op(g, KernelSpec::make(g->dim(), 0.5, 1.0, 2.0));
  const Eigen::VectorXd rhs = -Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g->size()));
  for (auto _ : state)
    benchmark::DoNotOptimize(policy_iteration_solve(op, Extremal::minus, rhs, ExteriorSpec::constant(0.0), SolverConfig{}));
  state.counters["nodes"] = static_cast<double>(g->size());
}
BENCHMARK(BM_PolicySolve)->Args({1, 128})->Args({1, 512})->Args({2, 16})->Unit(benchmark::kMillisecond);

void BM_SandwichSolve(benchmark::State& state) {
  const auto op = std::make_shared<const NonlocalOperator>(grid_for(1, static_cast<int>(state.range(0))),
                                                           KernelSpec::make(1, 0.5, 1.0, 2.0));
  const Problem p = Problem::make(op, Extremal::minus, 1.0, 0.5, ExteriorSpec::constant(0.0));
  for (auto _ : state) benchmark::DoNotOptimize(existence_sandwich(p, SolverConfig{}));
}
BENCHMARK(BM_SandwichSolve)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

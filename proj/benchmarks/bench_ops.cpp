// Microbenchmarks for the operator kernels that dominate a cohomology run:
// sparse coboundary application, pointwise mass application, and the dense
// symmetric eigensolve used for spectra.
#include <benchmark/benchmark.h>

#include <random>

#include "folcoh/grid.hpp"
#include "folcoh/linalg.hpp"

using namespace folcoh;
using namespace folcoh::grid;

namespace {

GridSpec bumpy3(int n) {
  GridSpec s;
  s.name = "bench";
  s.leaf_dim = 1;
  s.axes = {{"x", n, 1.0}, {"y", n, 1.0}, {"z", n / 2, 1.0}};
  s.metric = {"1 + 0.2*sin(2*pi*x)", "0.05*cos(2*pi*y)", "0",
              "1 + 0.1*cos(2*pi*z)", "0", "1"};
  s.frame = {{"1", "0", "0"}};
  return s;
}

const GridComplex& complex16() {
  static GridComplex G = GridComplex::build(bumpy3(16));
  return G;
}

void bench_d_apply(benchmark::State& state) {
  const auto& G = complex16();
  int k = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  auto f = G.random_form(k, rng);
  const auto& D = G.d(k);
  for (auto _ : state) {
    Eigen::VectorXd y = D * f.a;
    benchmark::DoNotOptimize(y.sum());
  }
  state.SetItemsProcessed(state.iterations() * G.dim(k));
}

void bench_mass_apply(benchmark::State& state) {
  const auto& G = complex16();
  int k = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  auto f = G.random_form(k, rng);
  for (auto _ : state) {
    Eigen::VectorXd y = G.mass_apply(k, f.a);
    benchmark::DoNotOptimize(y.sum());
  }
  state.SetItemsProcessed(state.iterations() * G.dim(k));
}

void bench_interior_apply(benchmark::State& state) {
  const auto& G = complex16();
  std::mt19937_64 rng(3);
  auto f = G.random_form(2, rng);
  auto op = G.interior_op(G.frame_field(0), 2);
  for (auto _ : state) {
    Eigen::VectorXd y = G.apply(op, f.a);
    benchmark::DoNotOptimize(y.sum());
  }
  state.SetItemsProcessed(state.iterations() * G.dim(2));
}

void bench_dense_eig(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss;
  la::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = gauss(rng);
  for (auto _ : state) {
    auto w = la::sym_eigenvalues(A);
    benchmark::DoNotOptimize(w[0]);
  }
}

}  // namespace

BENCHMARK(bench_d_apply)->Arg(0)->Arg(1)->Arg(2);
BENCHMARK(bench_mass_apply)->Arg(1)->Arg(2);
BENCHMARK(bench_interior_apply);
BENCHMARK(bench_dense_eig)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

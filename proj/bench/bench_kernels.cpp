#include <benchmark/benchmark.h>

#include <random>

#include "iterreg/kernels.hpp"

using namespace iterreg;

namespace {

Matrix random_matrix(std::size_t m, std::size_t n) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  Matrix A(m, n);
  for (double& v : A.values()) v = g(rng);
  return A;
}

template <void (*Kernel)(const Matrix&, ConstSpan, MutSpan), bool Transposed>
void run_kernel(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0)), n = static_cast<std::size_t>(state.range(1));
  const Matrix A = random_matrix(m, n);
  const Vector x(Transposed ? m : n, 1.0);
  Vector y(Transposed ? n : m);
  for (auto _ : state) {
    Kernel(A, x, y);
    benchmark::DoNotOptimize(y.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * n));
  state.counters["threads"] = kernels::thread_budget();
}

void sizes(benchmark::internal::Benchmark* b) {
  for (auto [m, n] : {std::pair{200, 500}, {1000, 2000}, {2000, 4000}}) b->Args({m, n});
}

}  // namespace

BENCHMARK(run_kernel<kernels::serial::gemv, false>)->Name("gemv/serial")->Apply(sizes);
BENCHMARK(run_kernel<kernels::omp::gemv, false>)->Name("gemv/omp")->Apply(sizes);
BENCHMARK(run_kernel<kernels::serial::gemv_t, true>)->Name("gemv_t/serial")->Apply(sizes);
BENCHMARK(run_kernel<kernels::omp::gemv_t, true>)->Name("gemv_t/omp")->Apply(sizes);

BENCHMARK_MAIN();

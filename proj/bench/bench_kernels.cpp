#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "vafusion/numerics/kernels.hpp"
#include "vafusion/numerics/rng.hpp"

namespace k = vaf::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  vaf::Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

template <bool Parallel>
void BM_gemm_nn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) k::gemm_nn(n, n, n, a.data(), b.data(), c.data(), false);
    else k::serial::gemm_nn(n, n, n, a.data(), b.data(), c.data(), false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Parallel>
void BM_gemm_tn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = random_values(n * n, 3), b = random_values(n * n, 4);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) k::gemm_tn(n, n, n, a.data(), b.data(), c.data());
    else k::serial::gemm_tn(n, n, n, a.data(), b.data(), c.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Parallel>
void BM_gemm_nt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = random_values(n * n, 5), b = random_values(n * n, 6);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) k::gemm_nt(n, n, n, a.data(), b.data(), c.data());
    else k::serial::gemm_nt(n, n, n, a.data(), b.data(), c.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Parallel>
void BM_masked_softmax(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0)), cols = rows;
  auto x = random_values(rows * cols, 7);
  std::vector<std::uint8_t> mask(rows * cols);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = i % 7 != 3;
  std::vector<double> out(rows * cols);
  for (auto _ : state) {
    if constexpr (Parallel) k::masked_softmax_rows(rows, cols, x.data(), mask.data(), out.data());
    else k::serial::masked_softmax_rows(rows, cols, x.data(), mask.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_layer_norm(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0)), cols = std::size_t{256};
  auto x = random_values(rows * cols, 8), gamma = random_values(cols, 9), beta = random_values(cols, 10);
  std::vector<double> xhat(rows * cols), y(rows * cols), inv(rows);
  for (auto _ : state) {
    if constexpr (Parallel)
      k::layer_norm_rows(rows, cols, x.data(), gamma.data(), beta.data(), 1e-5, xhat.data(), inv.data(), y.data());
    else
      k::serial::layer_norm_rows(rows, cols, x.data(), gamma.data(), beta.data(), 1e-5, xhat.data(), inv.data(),
                                 y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_gemm_nn<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_nn<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_tn<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_tn<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_nt<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_gemm_nt<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_masked_softmax<false>)->Arg(400);
BENCHMARK(BM_masked_softmax<true>)->Arg(400);
BENCHMARK(BM_layer_norm<false>)->Arg(400)->Arg(4000);
BENCHMARK(BM_layer_norm<true>)->Arg(400)->Arg(4000);

BENCHMARK_MAIN();

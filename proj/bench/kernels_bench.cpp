#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cfpn/kernels.hpp"

namespace {

using namespace cfpn::kernels;

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Shapes follow the first encoder layer for a 16-sample batch at ch=8, t=256.
template <void (*Fn)(const double*, const double*, double*, std::size_t, std::size_t, std::size_t)>
void BM_matmul_bt(benchmark::State& state) {
  const std::size_t m = 16, k = 2048, p = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(m * k, 1), b = random_vec(p * k, 2);
  std::vector<double> c(m * p);
  for (auto _ : state) {
    Fn(a.data(), b.data(), c.data(), m, k, p);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * m * k * p));
}

template <void (*Fn)(const double*, const double*, const double*, double*, const ConvGeometry&)>
void BM_conv2d(benchmark::State& state) {
  const std::size_t cout = static_cast<std::size_t>(state.range(0));
  const ConvGeometry g{1, 8, 256, cout, 3, 3, 1, 1, 1, 8, 256};
  const auto in = random_vec(8 * 256, 3), k = random_vec(cout * 9, 4), bias = random_vec(cout, 5);
  std::vector<double> out(cout * 8 * 256);
  for (auto _ : state) {
    Fn(in.data(), k.data(), bias.data(), out.data(), g);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_matmul_bt<reference::matmul_bt>)->Name("matmul_bt/reference")->Arg(128)->Arg(512);
BENCHMARK(BM_matmul_bt<parallel::matmul_bt>)->Name("matmul_bt/parallel")->Arg(128)->Arg(512);
BENCHMARK(BM_conv2d<reference::conv2d>)->Name("conv2d/reference")->Arg(8)->Arg(32);
BENCHMARK(BM_conv2d<parallel::conv2d>)->Name("conv2d/parallel")->Arg(8)->Arg(32);

BENCHMARK_MAIN();

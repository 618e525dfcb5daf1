#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "dcw/realized.hpp"

namespace {

// One day of synthetic intraday returns: J observations on M assets.
dcw::ReturnPanel make_panel(int J, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.1);
  dcw::ReturnPanel panel;
  panel.r.resize(J, m);
  for (int j = 0; j < J; ++j)
    for (int i = 0; i < m; ++i) panel.r(j, i) = normal(rng);
  return panel;
}

Eigen::MatrixXd make_pd(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = normal(rng);
  return a * a.transpose() + 0.1 * m * Eigen::MatrixXd::Identity(m, m);
}

void bm_realized_kernel(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  dcw::ReturnPanel panel = make_panel(J, m, 42);
  dcw::BandwidthResult bw;
  bw.H = 3.51 * std::pow(static_cast<double>(J), 0.6) *
         std::pow(0.5 / J, 0.4);  // zero-noise order of magnitude
  bw.lags = std::min(static_cast<int>(bw.H), J - 1);
  for (auto _ : state) {
    dcw::KernelResult k = dcw::realized_kernel(panel, bw);
    benchmark::DoNotOptimize(k.cov);
  }
}
BENCHMARK(bm_realized_kernel)
    ->Args({78, 5})
    ->Args({78, 20})
    ->Args({390, 5})
    ->Args({390, 20});

void bm_bandwidth(benchmark::State& state) {
  const int J = static_cast<int>(state.range(0));
  const int m = static_cast<int>(state.range(1));
  dcw::ReturnPanel fine = make_panel(J, m, 7);
  dcw::ReturnPanel coarse = make_panel(std::max(J / 15, 2), m, 8);
  for (auto _ : state) {
    dcw::BandwidthResult bw = dcw::bandwidth(fine, coarse);
    benchmark::DoNotOptimize(bw.H);
  }
}
BENCHMARK(bm_bandwidth)->Args({390, 5})->Args({390, 20});

void bm_ensure_invertible(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Eigen::MatrixXd s = make_pd(m, 11);
  for (auto _ : state) {
    dcw::RepairResult r = dcw::ensure_invertible(s);
    benchmark::DoNotOptimize(r.cov);
  }
}
BENCHMARK(bm_ensure_invertible)->Arg(5)->Arg(20)->Arg(50);

void bm_realized_weights(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Eigen::MatrixXd s = make_pd(m, 13);
  for (auto _ : state) {
    Eigen::VectorXd nu = dcw::realized_weights(s);
    benchmark::DoNotOptimize(nu);
  }
}
BENCHMARK(bm_realized_weights)->Arg(5)->Arg(20)->Arg(50);

}  // namespace

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <limits>
#include <random>
#include <vector>

#include "dcw/allocation.hpp"

namespace {

Eigen::MatrixXd make_pd(int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = normal(rng);
  return a * a.transpose() + 0.1 * m * Eigen::MatrixXd::Identity(m, m);
}

void bm_min_variance(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  Eigen::MatrixXd omega = make_pd(m, 3);
  for (auto _ : state) {
    Eigen::VectorXd w = dcw::min_variance(omega);
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(bm_min_variance)->Arg(5)->Arg(20)->Arg(50);

void bm_constrained_cold(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const double ec = static_cast<double>(state.range(1)) / 100.0;
  Eigen::MatrixXd omega = make_pd(m, 5);
  for (auto _ : state) {
    dcw::AllocationResult res = dcw::constrained_min_variance(omega, ec);
    benchmark::DoNotOptimize(res.weights);
  }
}
BENCHMARK(bm_constrained_cold)
    ->Args({5, 100})
    ->Args({5, 150})
    ->Args({20, 100})
    ->Args({20, 150})
    ->Args({50, 150});

// Rolling-day pattern: the matrix drifts a little, the previous solution
// seeds the next solve.
void bm_constrained_warm(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const double ec = 1.5;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 0.02);
  std::vector<Eigen::MatrixXd> days;
  Eigen::MatrixXd omega = make_pd(m, 7);
  for (int d = 0; d < 64; ++d) {
    Eigen::MatrixXd bump(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) bump(i, j) = normal(rng);
    omega += 0.5 * (bump + bump.transpose());
    omega += 0.05 * m * Eigen::MatrixXd::Identity(m, m);
    days.push_back(omega);
  }
  for (auto _ : state) {
    dcw::WarmStart warm;
    bool have_warm = false;
    for (const Eigen::MatrixXd& day : days) {
      dcw::AllocationResult res = dcw::constrained_min_variance(
          day, ec, {}, have_warm ? &warm : nullptr);
      warm = res.state;
      have_warm = true;
      benchmark::DoNotOptimize(res.weights);
    }
  }
}
BENCHMARK(bm_constrained_warm)->Arg(5)->Arg(20);

void bm_project_to_exposure(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 0.6);
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i) w(i) = normal(rng);
  w.array() += (1.0 - w.sum()) / m;  // unit budget, gross well above 1
  for (auto _ : state) {
    Eigen::VectorXd p = dcw::project_to_exposure(w, 1.25);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(bm_project_to_exposure)->Arg(5)->Arg(20)->Arg(50);

}  // namespace

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcw/dates.hpp"

namespace dcw {

/// Simulated market with persistent variance and correlation dynamics.
/// Daily covariances follow Omega_t = D_t R_t D_t where each asset's
/// variance is a stationary log-AR(1) and the correlation matrix follows a
/// targeted scalar recursion driven by the previous day's intraday sample
/// correlation. Intraday returns are Gaussian with covariance Omega_t / J;
/// observed tick prices optionally carry additive log-price noise.
struct SyntheticSpec {
  int assets = 5;
  int days = 500;
  int intraday_points = 78;   // trades per asset per day after the open
  Date start = Date::from_ymd(2008, 1, 1);

  std::vector<double> var_mean = {0.5, 1.0, 2.0, 3.0, 4.5};  // percent^2/day
  double var_phi = 0.97;      // log-variance AR(1) persistence
  double var_noise = 0.10;    // log-variance innovation standard deviation
  double corr_mean = 0.25;    // unconditional equicorrelation
  double corr_a = 0.17;       // update loading (enters squared)
  double corr_b = 0.95;       // persistence loading (enters squared)
  double noise_scale = 0.0;   // microstructure noise sd in log-price units
  std::uint64_t seed = 1;
};

/// Paths of the files a generation run produces.
struct SyntheticFiles {
  std::string ticks;
  std::string bars;
  std::string true_cov;
  std::string true_weights;
};

/// Writes ticks.csv, bars.csv, true_cov.csv and true_weights.csv into
/// `out_dir`. Deterministic for a given spec and seed.
SyntheticFiles generate_synthetic(const SyntheticSpec& spec,
                                  const std::string& out_dir);

/// Reads a spec from a flat key=value file; unknown keys are errors.
SyntheticSpec load_synthetic_spec(const std::string& path);

}  // namespace dcw

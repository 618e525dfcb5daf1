#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcw/realized.hpp"

namespace dcw {

/// Best objective value after each optimizer iteration; non-increasing.
struct FitTrace {
  std::vector<double> best;
  long evaluations = 0;
};

/// Heterogeneous autoregression of a daily variance series on its last
/// value, 5-day mean and 22-day mean.
struct HarParams {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double alpha3 = 0.0;
};

/// Ordinary least squares on observations t > 22 (the first 22 entries are
/// conditioning lags). Requires more than 32 observations; throws FitError
/// when the regressor matrix is rank deficient.
HarParams har_fit(std::span<const double> variance_series);

struct HarForecast {
  double value = 0.0;
  bool floored = false;  // negative prediction clamped to 1e-8
};

/// One-step-ahead variance from the last >= 22 observations (oldest first).
HarForecast har_forecast(const HarParams& p, std::span<const double> history);

/// Diagonal covariance from per-asset variance forecasts.
Eigen::MatrixXd vt_forecast(const Eigen::VectorXd& variances);

/// Scalar correlation dynamics with targeting:
///   R_t = (1 - a^2 - b^2) Pbar + a^2 P_{t-1} + b^2 R_{t-1}.
struct DccParams {
  double a = 0.0;
  double b = 0.0;
  Eigen::MatrixXd pbar;
};

struct DccFit {
  DccParams params;
  double objective = 0.0;  // sum of squared Frobenius one-step errors
  FitTrace trace;
};

/// Least-squares fit of (a, b) over a >= 0, b >= 0, a^2 + b^2 <= 1 - 1e-6 by
/// coarse grid scan plus simplex refinement. Pbar is targeted as the sample
/// mean of the inputs; the filter is seeded at R_1 = Pbar. Flat objectives
/// tie-break toward (0, 0).
DccFit dcc_fit(const std::vector<Eigen::MatrixXd>& correlations);

/// One filter step; unit diagonal is restored exactly.
Eigen::MatrixXd dcc_forecast(const DccParams& p, const Eigen::MatrixXd& prev_corr,
                             const Eigen::MatrixXd& prev_r);

/// Omega = D R D with D = diag(sqrt(variances)); the diagonal is set to the
/// variance forecasts exactly.
Eigen::MatrixXd dcc_covariance(const Eigen::MatrixXd& correlation,
                               const Eigen::VectorXd& variances);

/// Random-walk forecast: yesterday's realized matrix, repaired when needed.
RepairResult rw_forecast(const Eigen::MatrixXd& prev_cov);

/// Per-asset weight dynamics with targeting:
///   w_{i,t} = (1 - a_i - b_i) wbar_i + a_i nu_{i,t-1} + b_i w_{i,t-1}.
struct DcwParams {
  Eigen::VectorXd astar;
  Eigen::VectorXd bstar;
  Eigen::VectorXd omega_bar;  // targeted unconditional weights
};

struct DcwFit {
  DcwParams params;
  Eigen::VectorXd objective;  // per-asset sum of squared one-step errors
  std::vector<FitTrace> trace;
};

/// Per-asset conditional least squares on a T x M panel of
/// realized weights. |b_i| <= 1 - 1e-6 is enforced; a_i is unrestricted in
/// sign. The recursion is seeded at w_0 = wbar. Requires T >= 30.
DcwFit dcw_fit(const Eigen::MatrixXd& nu);

struct DcwForecast {
  Eigen::VectorXd raw;         // recursion output before normalization
  Eigen::VectorXd normalized;  // raw / sum(raw)
  double divisor = 1.0;
};

/// One recursion step. Throws NumericError when |sum(raw)| < 1e-8.
DcwForecast dcw_forecast(const DcwParams& p, const Eigen::VectorXd& prev_nu,
                         const Eigen::VectorXd& prev_omega_raw);

/// Equal weights 1/M.
Eigen::VectorXd naive_weights(Eigen::Index m);

/// Fitted parameters of one strategy for one estimation window. Only the
/// fields the strategy uses are populated.
struct ModelParams {
  std::vector<std::string> tickers;
  std::optional<std::map<std::string, HarParams>> har;
  std::optional<DccParams> dcc;
  std::optional<DcwParams> dcw;  // aligned with `tickers`
};

}  // namespace dcw

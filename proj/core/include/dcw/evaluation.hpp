#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dcw/market_data.hpp"
#include "dcw/realized.hpp"

namespace dcw {

/// Unit conventions: daily covariances are measured in percent squared
/// (returns scaled by 100), so certainty-equivalent quantities convert to
/// basis points with a factor of 100. tau is the one-way markup per unit of
/// traded value, in percent (0.05 = 5 bp), the same return units.
struct EvalConfig {
  double gamma = 1.0;    // risk aversion
  double tau_pct = 0.0;  // transaction markup, percent
  double bp = 100.0;     // percent -> basis point conversion
};

/// Average realized portfolio variance T^{-1} sum_t w_t' S_t w_t.
/// Weight rows align with the covariance entries by position.
double portfolio_variance(const Eigen::MatrixXd& weights,
                          const std::vector<Eigen::MatrixXd>& covs);

/// Day-count-weighted mean, the "All" column aggregation across periods.
double weighted_mean(const std::vector<double>& values,
                     const std::vector<long>& day_counts);

/// Certainty-equivalent gain of switching strategy 1 -> 2, in basis points:
/// bp * gamma/2 * (pv1 - pv2).
double ceq(double pv1, double pv2, const EvalConfig& cfg);

/// Average gross position T^{-1} sum_t sum_j |w_{j,t}|; the trade-volume
/// proxy under full daily liquidation.
double turnover(const Eigen::MatrixXd& weights);

/// Exact two-trip turnover: 2 TO = T^{-1} sum_t sum_j (2 + r^{oc}) |w|,
/// with open-to-close returns as plain fractions.
double exact_turnover(const Eigen::MatrixXd& weights,
                      const Eigen::MatrixXd& oc_returns);

/// Round-trip cost per day, 2 tau TO; unit follows tau's.
double transaction_costs(double to, double tau);

/// Net certainty-equivalent of switching 1 -> 2 in basis points:
/// bp * (gamma/2 (pv1 - pv2) + 2 tau (to1 - to2) / 100-consistent units).
double nceq(double pv1, double pv2, double to1, double to2, const EvalConfig& cfg);

/// Break-even transaction cost verdict for switching strategy 1 -> 2.
struct BetcResult {
  enum class Kind { Always, Never, PreferredBelow, PreferredAbove };
  Kind kind = Kind::Never;
  double threshold_bp = 0.0;  // tau*/gamma when kind is PreferredBelow/Above
};

BetcResult betc(double pv1, double pv2, double to1, double to2,
                const EvalConfig& cfg);

std::string to_string(BetcResult::Kind kind);

/// Per-asset forecast precision 1 - MSE(forecast) / MSE(mean benchmark).
/// The benchmark is the ex-post sample mean of the realized series. Assets
/// whose realized series has zero variance are flagged undefined.
struct R2Result {
  Eigen::VectorXd r2;
  std::vector<bool> undefined;
};

R2Result oos_r2(const Eigen::MatrixXd& forecasts, const Eigen::MatrixXd& realized);

/// In-sample fit R^2 of fitted one-step-ahead paths against realizations,
/// same benchmark convention.
R2Result is_r2(const Eigen::MatrixXd& fitted, const Eigen::MatrixXd& realized);

/// Net-utility frontier over the exposure-cap grid. For each tau/gamma on
/// the grid, value(tau) = max over caps of -2 (tau/gamma) TO_ec - PV_ec / 2
/// (percent units; emitted per basis point of tau/gamma). Breakpoints are
/// the tau values where the winning cap changes.
struct Envelope {
  std::vector<double> tau_bp;    // grid, basis points of tau/gamma
  std::vector<double> value;     // upper envelope at each grid point
  std::vector<int> winner;       // index into the cap grid
  std::vector<double> breakpoints_bp;
};

Envelope utility_envelope(const std::vector<double>& pv_per_ec,
                          const std::vector<double>& to_per_ec,
                          const EvalConfig& cfg, double tau_max_bp = 25.0,
                          double tau_step_bp = 0.25);

/// Daily sector shares of gross exposure: |w| rescaled to sum one per day,
/// summed within sectors. Sectors are ordered by period-average share,
/// largest first.
struct SectorImportance {
  std::vector<std::string> sectors;
  Eigen::MatrixXd daily_share;  // T x n_sectors
  Eigen::VectorXd average;      // per sector
};

SectorImportance sector_importance(const Eigen::MatrixXd& weights,
                                   const std::vector<std::string>& tickers,
                                   const AssetMeta& meta);

}  // namespace dcw

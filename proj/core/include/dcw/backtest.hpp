#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dcw/allocation.hpp"
#include "dcw/dates.hpp"
#include "dcw/evaluation.hpp"
#include "dcw/market_data.hpp"
#include "dcw/realized.hpp"

namespace dcw {

enum class Strategy { Naive, VT, RW, DCC, DCW };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

/// Whether a strategy's weights respond to the exposure-cap grid. Naive and
/// VT weights are long-only by construction, so only the cap of 1 applies.
bool uses_exposure_grid(Strategy s);

/// Full pipeline configuration. Loaded from a JSON file; unknown keys are
/// rejected so typos fail fast.
struct BacktestConfig {
  std::string ticks_path;        // raw tick csv; optional when covariances given
  std::string bars_path;         // daily open/close csv (exact-turnover input)
  std::string covariances_path;  // precomputed covariance series, skips ticks
  std::vector<std::string> tickers;
  std::vector<std::string> sectors;  // aligned with tickers; empty = no report
  int is_years = 5;                  // estimation window, calendar years
  int oos_years = 1;                 // forecast span per window
  std::vector<Strategy> strategies;
  std::vector<double> ec_grid;       // exposure caps >= 1; +inf allowed
  EvalConfig eval;
  CleanConfig clean;
  SolverConfig solver;
  int bin_minutes = 15;          // calendar bin width for the bandwidth inputs
  double return_scale = 100.0;   // intraday log returns scaled to percent
  bool dcw_raw_feedback = true;  // recursion feeds back raw, not normalized
  std::uint64_t seed = 1;        // reserved for synthetic-mode runs
  int threads = 1;               // accepted for interface stability; results
                                 // never depend on it
  std::string out_dir = "out";
};

/// Parses and validates a config file. Throws ConfigError on unknown keys,
/// out-of-range values, an empty exposure grid or an empty strategy list.
BacktestConfig load_backtest_config(const std::string& path);

/// Stable hash of every config field; changes whenever any field changes.
std::string config_digest(const BacktestConfig& cfg);

/// Tick files to daily covariance series: load, clean, refresh-time sync,
/// scale, realized kernel, invertibility repair. Every configured ticker must
/// trade on every day present in the file.
CovMatrixSeries covariance_from_ticks(const BacktestConfig& cfg,
                                      CleanStats* stats = nullptr);

/// Realized performance of one strategy at one exposure cap.
struct StrategyPath {
  Strategy strategy = Strategy::Naive;
  double ec = 1.0;  // +inf when uncapped
  std::vector<double> pv_by_year;
  std::vector<double> to_by_year;
  std::vector<double> tox_by_year;
  double pv = 0.0;        // day-weighted over all OOS days
  double to = 0.0;
  double to_exact = 0.0;
};

/// Switching diagnostics between two strategy paths.
struct PairComparison {
  Strategy from = Strategy::Naive;
  Strategy to = Strategy::Naive;
  double from_ec = 1.0;
  double to_ec = 1.0;
  double dpv = 0.0;  // pv_from - pv_to
  double dto = 0.0;
  double ceq_bp = 0.0;
  double nceq_bp = 0.0;
  BetcResult betc;
};

/// Out-of-sample weight-forecast precision per asset.
struct R2Block {
  Strategy strategy = Strategy::Naive;
  std::vector<double> r2;  // NaN when undefined
  std::vector<bool> undefined;
};

/// In-sample fit precision of the weight recursion for one window.
struct IsR2Block {
  int first_oos_year = 0;  // window label
  std::vector<double> r2;
  double mean = 0.0;  // cross-sectional average
};

/// Net-utility envelope of one strategy across its exposure caps.
struct EnvelopeBlock {
  Strategy strategy = Strategy::Naive;
  std::vector<double> ecs;  // constituent lines; envelope.winner indexes this
  Envelope envelope;
  std::vector<double> diff_vs_vt;  // envelope minus the VT line; empty if no VT
};

/// Sector shares of gross exposure for one strategy path.
struct SectorBlock {
  Strategy strategy = Strategy::Naive;
  double ec = 1.0;
  std::vector<std::string> sectors;
  std::vector<Date> dates;
  Eigen::MatrixXd daily;     // days x sectors
  Eigen::VectorXd average;
};

struct BacktestReport {
  std::string version;
  std::string config_digest;
  std::vector<std::string> tickers;
  std::vector<int> years;          // OOS calendar years in order
  std::vector<long> days_by_year;
  std::vector<StrategyPath> paths;
  std::vector<PairComparison> pairs;
  std::vector<R2Block> r2_oos;
  std::vector<IsR2Block> r2_is;
  std::vector<EnvelopeBlock> envelopes;
  std::vector<SectorBlock> sectors;
};

/// Runs the rolling-window protocol: per window, fit on the in-sample years,
/// forecast each out-of-sample day one step ahead, allocate under every
/// exposure cap, evaluate. Persists covariances, per-window parameters and
/// weight paths under cfg.out_dir. Deterministic for fixed config and data.
BacktestReport run_backtest(const BacktestConfig& cfg);

/// Writes the CSV report family, summary.json and manifest.json.
void emit_reports(const BacktestReport& rep, const std::string& dir);

void save_report(const BacktestReport& rep, const std::string& path);
BacktestReport load_report(const std::string& path);

/// Fixed-width console rendering of the headline tables.
std::string report_text(const BacktestReport& rep);

}  // namespace dcw

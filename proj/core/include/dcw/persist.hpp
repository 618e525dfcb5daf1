#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dcw/dates.hpp"
#include "dcw/models.hpp"
#include "dcw/realized.hpp"

namespace dcw {

/// Long-form covariance CSV: an asset-ordering header line, then one row per
/// upper-triangle entry. Doubles are written with round-trip precision so
/// reloading reproduces the matrices bit for bit.
void save_cov_series(const CovMatrixSeries& series, const std::string& path);

/// Loads a covariance series. When `expected_tickers` is given, the file's
/// asset-ordering line must match it exactly (DataError otherwise).
CovMatrixSeries load_cov_series(const std::string& path,
                                const std::vector<std::string>* expected_tickers = nullptr);

/// Flat key=value parameter file, one strategy's fit per file. Keys follow
/// the `alpha0.TICKER`, `dcc.a`, `dcw.astar.TICKER` convention. Round-trips
/// exactly.
void save_model_params(const ModelParams& params, const std::string& path);
ModelParams load_model_params(const std::string& path);

/// Dated weight panel, long CSV `date,ticker,weight`.
struct WeightSeries {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd w;  // T x M
};

void save_weight_series(const WeightSeries& series, const std::string& path);
WeightSeries load_weight_series(const std::string& path);

}  // namespace dcw

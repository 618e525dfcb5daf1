#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dcw/dates.hpp"
#include "dcw/market_data.hpp"

namespace dcw {

/// Parzen weight at |x|: 1 - 6x^2 + 6x^3 on [0, 1/2], 2(1-x)^3 on (1/2, 1],
/// zero beyond 1.
double parzen_weight(double x);

struct BandwidthResult {
  double H = 0.0;  // kernel bandwidth, >= 0
  int lags = 0;    // l = min(floor(H), J-1)
};

/// Data-driven bandwidth, averaged across assets:
///   H = (1/M) sum_i 3.51 J^{3/5} ((2J)^{-1} sum_j r_ij^2 / sum_j rb_ij^2)^{2/5}
/// where rb are the coarse calendar-binned returns of the same day.
/// Throws DataError naming the asset when a binned variance is zero.
BandwidthResult bandwidth(const ReturnPanel& returns, const ReturnPanel& binned);

/// Realized autocovariance Gamma_h = sum_{j=h+1..J} r_j r_{j-h}' for h >= 0,
/// transposed relationship for h < 0. Requires |h| < J.
Eigen::MatrixXd autocov_gamma(const Eigen::MatrixXd& r, int h);

struct KernelResult {
  Eigen::MatrixXd cov;  // symmetric M x M
  BandwidthResult bw;
  bool psd = true;  // smallest eigenvalue >= -1e-12 * largest
};

/// Realized kernel estimate S = sum_{|h| <= l} k(h/H) Gamma_h, symmetrized by
/// averaging with its transpose. With H = 0 only the h = 0 term contributes.
/// The matrix is returned as estimated; possible repairs happen downstream.
KernelResult realized_kernel(const ReturnPanel& returns, const ReturnPanel& binned);
KernelResult realized_kernel(const ReturnPanel& returns, const BandwidthResult& bw);

struct RepairResult {
  Eigen::MatrixXd cov;
  bool repaired = false;
  double ridge = 0.0;  // absolute ridge that was added to the diagonal
};

/// Adds a relative ridge eta * trace(S)/M to the diagonal when S is singular,
/// indefinite, or has condition number above 1e12; otherwise returns S
/// unchanged. Repair is recorded, never silent.
RepairResult ensure_invertible(const Eigen::MatrixXd& S, double eta = 1e-8);

/// P = D^{-1} S D^{-1} with D = diag(sqrt(S_ii)); unit diagonal exactly.
/// Throws NumericError on a non-positive diagonal entry.
Eigen::MatrixXd realized_correlation(const Eigen::MatrixXd& S);

/// Global minimum-variance weights nu = (i' S^{-1} i)^{-1} S^{-1} i.
Eigen::VectorXd realized_weights(const Eigen::MatrixXd& S);

/// Unnormalized quadratic-utility weights gamma^{-1} S^{-1} r.
Eigen::VectorXd realized_weights_quadutil(const Eigen::MatrixXd& S,
                                          const Eigen::VectorXd& expected_returns,
                                          double gamma);

/// One day's repaired covariance with its provenance flags.
struct CovEntry {
  Date date;
  Eigen::MatrixXd cov;
  bool psd = true;        // kernel estimate was numerically psd
  bool repaired = false;  // ridge was applied
  double ridge = 0.0;
};

/// Dated covariance sequence over a fixed asset ordering.
struct CovMatrixSeries {
  std::vector<std::string> tickers;
  std::vector<CovEntry> entries;  // strictly increasing dates

  Eigen::Index size() const { return static_cast<Eigen::Index>(entries.size()); }
};

}  // namespace dcw

#include "dcw/realized.hpp"

#include <cmath>

#include "dcw/errors.hpp"

namespace dcw {

double parzen_weight(double x) {
  x = std::abs(x);
  if (x <= 0.5) return 1.0 - 6.0 * x * x + 6.0 * x * x * x;
  if (x <= 1.0) {
    double y = 1.0 - x;
    return 2.0 * y * y * y;
  }
  return 0.0;
}

BandwidthResult bandwidth(const ReturnPanel& returns, const ReturnPanel& binned) {
  const Eigen::Index J = returns.r.rows();
  const Eigen::Index m = returns.r.cols();
  if (J < 1) throw DataError("bandwidth needs at least one return");
  if (binned.r.cols() != m)
    throw DataError("binned panel has mismatched asset count");

  double sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double rv = returns.r.col(i).squaredNorm();
    double rv_binned = binned.r.col(i).squaredNorm();
    if (rv_binned <= 0.0)
      throw DataError("zero binned variance for asset " +
                      (i < static_cast<Eigen::Index>(returns.tickers.size())
                           ? returns.tickers[static_cast<size_t>(i)]
                           : std::to_string(i)));
    double noise_ratio = rv / (2.0 * static_cast<double>(J)) / rv_binned;
    sum += 3.51 * std::pow(static_cast<double>(J), 0.6) * std::pow(noise_ratio, 0.4);
  }

  BandwidthResult out;
  out.H = sum / static_cast<double>(m);
  out.lags = static_cast<int>(std::min<double>(std::floor(out.H),
                                               static_cast<double>(J - 1)));
  return out;
}

Eigen::MatrixXd autocov_gamma(const Eigen::MatrixXd& r, int h) {
  const Eigen::Index J = r.rows();
  if (std::abs(h) >= J) throw DataError("autocovariance lag out of range");
  if (h < 0) return autocov_gamma(r, -h).transpose();
  // sum_{j=h+1..J} r_j r_{j-h}' in 1-based indexing.
  return r.bottomRows(J - h).transpose() * r.topRows(J - h);
}

KernelResult realized_kernel(const ReturnPanel& returns, const BandwidthResult& bw) {
  const Eigen::Index J = returns.r.rows();
  if (J < 1) throw DataError("realized kernel needs at least one return");

  Eigen::MatrixXd S = autocov_gamma(returns.r, 0);
  for (int h = 1; h <= bw.lags; ++h) {
    double w = parzen_weight(static_cast<double>(h) / bw.H);
    if (w == 0.0) continue;
    Eigen::MatrixXd g = autocov_gamma(returns.r, h);
    S += w * (g + g.transpose());
  }
  S = 0.5 * (S + S.transpose()).eval();

  KernelResult out;
  out.bw = bw;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  out.psd = es.eigenvalues().minCoeff() >= -1e-12 * std::max(lmax, 1.0);
  out.cov = std::move(S);
  return out;
}

KernelResult realized_kernel(const ReturnPanel& returns, const ReturnPanel& binned) {
  return realized_kernel(returns, bandwidth(returns, binned));
}

RepairResult ensure_invertible(const Eigen::MatrixXd& S, double eta) {
  RepairResult out;
  const Eigen::Index m = S.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  double lmax = es.eigenvalues().maxCoeff();
  bool bad = lmin <= 0.0 || lmax <= 0.0 || lmax / lmin > 1e12;
  if (!bad) {
    out.cov = S;
    return out;
  }
  out.repaired = true;
  out.ridge = eta * S.trace() / static_cast<double>(m);
  if (!(out.ridge > 0.0))
    throw NumericError("covariance repair failed: non-positive trace");
  out.cov = S + out.ridge * Eigen::MatrixXd::Identity(m, m);
  return out;
}

Eigen::MatrixXd realized_correlation(const Eigen::MatrixXd& S) {
  const Eigen::Index m = S.rows();
  Eigen::VectorXd d = S.diagonal();
  if ((d.array() <= 0.0).any())
    throw NumericError("correlation undefined: non-positive variance");
  Eigen::VectorXd inv_sd = d.array().sqrt().inverse();
  Eigen::MatrixXd P = inv_sd.asDiagonal() * S * inv_sd.asDiagonal();
  P = 0.5 * (P + P.transpose()).eval();
  P.diagonal().setOnes();
  return P;
}

Eigen::VectorXd realized_weights(const Eigen::MatrixXd& S) {
  const Eigen::Index m = S.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericError("minimum-variance weights: matrix not positive definite");
  Eigen::VectorXd x = llt.solve(Eigen::VectorXd::Ones(m));
  double denom = x.sum();
  if (!(std::abs(denom) > 0.0))
    throw NumericError("minimum-variance weights: degenerate normalization");
  return x / denom;
}

Eigen::VectorXd realized_weights_quadutil(const Eigen::MatrixXd& S,
                                          const Eigen::VectorXd& expected_returns,
                                          double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("risk aversion must be positive");
  if (expected_returns.size() != S.rows())
    throw DataError("expected-return vector length mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw NumericError("quadratic-utility weights: matrix not positive definite");
  return llt.solve(expected_returns) / gamma;
}

}  // namespace dcw

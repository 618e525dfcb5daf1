#include "dcw/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dcw/errors.hpp"

namespace dcw {

double portfolio_variance(const Eigen::MatrixXd& weights,
                          const std::vector<Eigen::MatrixXd>& covs) {
  const Eigen::Index T = weights.rows();
  if (T == 0 || static_cast<size_t>(T) != covs.size())
    throw DataError("weights and covariances are misaligned");
  double sum = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& s = covs[static_cast<size_t>(t)];
    if (s.rows() != weights.cols())
      throw DataError("covariance dimension mismatch in variance average");
    sum += weights.row(t) * s * weights.row(t).transpose();
  }
  return sum / static_cast<double>(T);
}

double weighted_mean(const std::vector<double>& values,
                     const std::vector<long>& day_counts) {
  if (values.empty() || values.size() != day_counts.size())
    throw DataError("weighted mean needs aligned values and day counts");
  double num = 0.0;
  long den = 0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (day_counts[i] < 0) throw DataError("negative day count");
    num += values[i] * static_cast<double>(day_counts[i]);
    den += day_counts[i];
  }
  if (den == 0) throw DataError("weighted mean over zero days");
  return num / static_cast<double>(den);
}

double ceq(double pv1, double pv2, const EvalConfig& cfg) {
  return cfg.bp * cfg.gamma * 0.5 * (pv1 - pv2);
}

double turnover(const Eigen::MatrixXd& weights) {
  if (weights.rows() == 0) throw DataError("turnover of an empty weight panel");
  return weights.cwiseAbs().sum() / static_cast<double>(weights.rows());
}

double exact_turnover(const Eigen::MatrixXd& weights,
                      const Eigen::MatrixXd& oc_returns) {
  if (weights.rows() == 0 || weights.rows() != oc_returns.rows() ||
      weights.cols() != oc_returns.cols())
    throw DataError("weights and open-close returns are misaligned");
  double two_to = ((2.0 + oc_returns.array()) * weights.array().abs()).sum() /
                  static_cast<double>(weights.rows());
  return 0.5 * two_to;
}

double transaction_costs(double to, double tau) { return 2.0 * tau * to; }

double nceq(double pv1, double pv2, double to1, double to2, const EvalConfig& cfg) {
  double pct = cfg.gamma * 0.5 * (pv1 - pv2) + 2.0 * cfg.tau_pct * (to1 - to2);
  return cfg.bp * pct;
}

BetcResult betc(double pv1, double pv2, double to1, double to2,
                const EvalConfig& cfg) {
  const double dpv = pv1 - pv2;
  const double dto = to1 - to2;
  BetcResult out;
  if (dpv >= 0.0 && dto >= 0.0 && (dpv > 0.0 || dto > 0.0)) {
    out.kind = BetcResult::Kind::Always;
  } else if (dpv <= 0.0 && dto <= 0.0) {
    out.kind = BetcResult::Kind::Never;
  } else {
    // tau*/gamma where net gains change sign; reported in basis points.
    out.threshold_bp = cfg.bp * (-0.25 * dpv / dto);
    out.kind = dpv > 0.0 ? BetcResult::Kind::PreferredBelow
                         : BetcResult::Kind::PreferredAbove;
  }
  return out;
}

std::string to_string(BetcResult::Kind kind) {
  switch (kind) {
    case BetcResult::Kind::Always:
      return "Always";
    case BetcResult::Kind::Never:
      return "Never";
    case BetcResult::Kind::PreferredBelow:
      return "PreferredBelow";
    case BetcResult::Kind::PreferredAbove:
      return "PreferredAbove";
  }
  return "Never";
}

namespace {

R2Result r2_against_mean(const Eigen::MatrixXd& predicted,
                         const Eigen::MatrixXd& realized) {
  if (predicted.rows() != realized.rows() || predicted.cols() != realized.cols())
    throw DataError("forecast and realized panels are misaligned");
  if (predicted.rows() < 2) throw DataError("need at least two observations");
  const Eigen::Index m = predicted.cols();
  const double T = static_cast<double>(predicted.rows());
  R2Result out;
  out.r2.resize(m);
  out.undefined.assign(static_cast<size_t>(m), false);
  for (Eigen::Index i = 0; i < m; ++i) {
    double mean = realized.col(i).mean();
    double mse_bench = (realized.col(i).array() - mean).square().sum() / T;
    double mse_model = (realized.col(i) - predicted.col(i)).squaredNorm() / T;
    if (mse_bench <= 0.0) {
      out.undefined[static_cast<size_t>(i)] = true;
      out.r2(i) = std::numeric_limits<double>::quiet_NaN();
    } else {
      out.r2(i) = 1.0 - mse_model / mse_bench;
    }
  }
  return out;
}

}  // namespace

R2Result oos_r2(const Eigen::MatrixXd& forecasts, const Eigen::MatrixXd& realized) {
  return r2_against_mean(forecasts, realized);
}

R2Result is_r2(const Eigen::MatrixXd& fitted, const Eigen::MatrixXd& realized) {
  return r2_against_mean(fitted, realized);
}

Envelope utility_envelope(const std::vector<double>& pv_per_ec,
                          const std::vector<double>& to_per_ec,
                          const EvalConfig& cfg, double tau_max_bp,
                          double tau_step_bp) {
  const size_t n = pv_per_ec.size();
  if (n == 0 || n != to_per_ec.size())
    throw DataError("envelope needs aligned PV and turnover grids");
  if (tau_step_bp <= 0.0 || tau_max_bp < 0.0)
    throw ConfigError("bad envelope grid");

  Envelope env;
  auto line_value = [&](size_t k, double tau_bp) {
    double tau_pct = tau_bp / cfg.bp;  // tau/gamma in percent units
    return -2.0 * tau_pct * to_per_ec[k] - 0.5 * pv_per_ec[k];
  };

  int prev_winner = -1;
  long steps = std::lround(tau_max_bp / tau_step_bp);
  for (long s = 0; s <= steps; ++s) {
    double tau_bp = static_cast<double>(s) * tau_step_bp;
    double best = -std::numeric_limits<double>::infinity();
    int win = 0;
    for (size_t k = 0; k < n; ++k) {
      double v = line_value(k, tau_bp);
      if (v > best) {
        best = v;
        win = static_cast<int>(k);
      }
    }
    env.tau_bp.push_back(tau_bp);
    env.value.push_back(best);
    env.winner.push_back(win);
    if (prev_winner >= 0 && win != prev_winner) {
      // Exact crossing of the two winning lines: the pairwise break-even
      // markup between the two cap variants.
      size_t a = static_cast<size_t>(prev_winner), b = static_cast<size_t>(win);
      double dto = to_per_ec[a] - to_per_ec[b];
      if (dto != 0.0) {
        double tau_pct = -0.25 * (pv_per_ec[a] - pv_per_ec[b]) / dto;
        env.breakpoints_bp.push_back(cfg.bp * tau_pct);
      }
    }
    prev_winner = win;
  }
  return env;
}

SectorImportance sector_importance(const Eigen::MatrixXd& weights,
                                   const std::vector<std::string>& tickers,
                                   const AssetMeta& meta) {
  const Eigen::Index T = weights.rows();
  const Eigen::Index m = weights.cols();
  if (m != static_cast<Eigen::Index>(tickers.size()))
    throw DataError("weight columns and ticker list are misaligned");
  if (T == 0) throw DataError("sector importance of an empty panel");

  std::vector<std::string> sectors;
  std::vector<int> sector_of(static_cast<size_t>(m));
  for (size_t i = 0; i < tickers.size(); ++i) {
    const std::string& sec = meta.sector_of(tickers[i]);  // throws on unknown
    auto it = std::find(sectors.begin(), sectors.end(), sec);
    if (it == sectors.end()) {
      sector_of[i] = static_cast<int>(sectors.size());
      sectors.push_back(sec);
    } else {
      sector_of[i] = static_cast<int>(it - sectors.begin());
    }
  }

  Eigen::MatrixXd share = Eigen::MatrixXd::Zero(T, static_cast<Eigen::Index>(sectors.size()));
  for (Eigen::Index t = 0; t < T; ++t) {
    double gross = weights.row(t).cwiseAbs().sum();
    if (gross <= 0.0) throw DataError("zero gross exposure day in sector report");
    for (Eigen::Index i = 0; i < m; ++i)
      share(t, sector_of[static_cast<size_t>(i)]) += std::abs(weights(t, i)) / gross;
  }

  Eigen::VectorXd avg = share.colwise().mean();
  std::vector<int> order(sectors.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return avg(a) > avg(b); });

  SectorImportance out;
  out.daily_share.resize(T, share.cols());
  out.average.resize(share.cols());
  for (size_t k = 0; k < order.size(); ++k) {
    out.sectors.push_back(sectors[static_cast<size_t>(order[k])]);
    out.daily_share.col(static_cast<Eigen::Index>(k)) = share.col(order[k]);
    out.average(static_cast<Eigen::Index>(k)) = avg(order[k]);
  }
  return out;
}

}  // namespace dcw

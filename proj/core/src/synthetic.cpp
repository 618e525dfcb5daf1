#include "dcw/synthetic.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <random>

#include "dcw/errors.hpp"
#include "dcw/io_util.hpp"
#include "dcw/market_data.hpp"
#include "dcw/persist.hpp"
#include "dcw/realized.hpp"

namespace dcw {
namespace {

constexpr std::int32_t kOffsetSec = -5 * 3600;  // exchange-local offset

std::string make_ticker(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "SYN%02d", i);
  return buf;
}

void validate(const SyntheticSpec& spec) {
  if (spec.assets < 1) throw ConfigError("assets must be >= 1");
  if (spec.days < 1) throw ConfigError("days must be >= 1");
  if (spec.intraday_points < 2) throw ConfigError("intraday_points must be >= 2");
  if (spec.var_mean.empty()) throw ConfigError("var_mean must be non-empty");
  for (double v : spec.var_mean)
    if (!(v > 0.0)) throw ConfigError("var_mean entries must be positive");
  if (spec.var_phi < 0.0 || spec.var_phi >= 1.0)
    throw ConfigError("var_phi must lie in [0, 1)");
  if (spec.var_noise < 0.0) throw ConfigError("var_noise must be >= 0");
  if (spec.assets > 1) {
    double lo = -1.0 / (spec.assets - 1);
    if (spec.corr_mean <= lo || spec.corr_mean >= 1.0)
      throw ConfigError("corr_mean outside the valid equicorrelation range");
  }
  if (spec.corr_a < 0.0 || spec.corr_b < 0.0 ||
      spec.corr_a * spec.corr_a + spec.corr_b * spec.corr_b >= 1.0)
    throw ConfigError("correlation loadings must satisfy a^2 + b^2 < 1");
  if (spec.noise_scale < 0.0) throw ConfigError("noise_scale must be >= 0");
}

}  // namespace

SyntheticFiles generate_synthetic(const SyntheticSpec& spec,
                                  const std::string& out_dir) {
  validate(spec);
  ensure_dir(out_dir);

  const int m = spec.assets;
  const int J = spec.intraday_points;
  const SessionConfig session;
  const std::int64_t spacing = (session.end_ns - session.start_ns) / J;
  const std::int64_t max_jitter = std::min<std::int64_t>(2 * kNsPerSec, spacing / 4);

  std::vector<std::string> tickers;
  for (int i = 0; i < m; ++i) tickers.push_back(make_ticker(i));

  // Stationary starting state.
  Eigen::VectorXd log_vbar(m);
  for (int i = 0; i < m; ++i)
    log_vbar(i) = std::log(spec.var_mean[static_cast<size_t>(i) % spec.var_mean.size()]);
  Eigen::VectorXd log_v = log_vbar;
  Eigen::MatrixXd rbar = Eigen::MatrixXd::Constant(m, m, spec.corr_mean);
  rbar.diagonal().setOnes();
  Eigen::MatrixXd R = rbar;
  const double a2 = spec.corr_a * spec.corr_a;
  const double b2 = spec.corr_b * spec.corr_b;

  Eigen::VectorXd log_price(m);
  for (int i = 0; i < m; ++i) log_price(i) = std::log(50.0 + 10.0 * i);

  std::string ticks = "timestamp,ticker,price\n";
  std::string bars = "date,ticker,open,close\n";
  ticks.reserve(static_cast<size_t>(spec.days) * static_cast<size_t>(m) *
                    static_cast<size_t>(J + 1) * 56 +
                64);

  CovMatrixSeries true_cov;
  true_cov.tickers = tickers;
  WeightSeries true_w;
  true_w.tickers = tickers;
  true_w.w.resize(spec.days, m);

  Date date = spec.start;
  while (date.is_weekend()) date = date + 1;

  for (int day = 0; day < spec.days; ++day) {
    std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ull +
                        static_cast<std::uint64_t>(day) + 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<std::int64_t> jitter(
        0, std::max<std::int64_t>(max_jitter, 0));

    Eigen::VectorXd v = log_v.array().exp();
    Eigen::VectorXd sd = v.array().sqrt();
    Eigen::MatrixXd omega = sd.asDiagonal() * R * sd.asDiagonal();
    omega.diagonal() = v;

    CovEntry entry;
    entry.date = date;
    entry.cov = omega;
    true_cov.entries.push_back(entry);
    true_w.dates.push_back(date);
    true_w.w.row(day) = realized_weights(omega).transpose();

    Eigen::LLT<Eigen::MatrixXd> llt(omega / static_cast<double>(J));
    if (llt.info() != Eigen::Success)
      throw NumericError("synthetic covariance not positive definite");
    Eigen::MatrixXd chol = llt.matrixL();

    // Latent intraday log-price paths; returns are in percent units.
    Eigen::MatrixXd path(J + 1, m);
    path.row(0) = log_price.transpose();
    Eigen::MatrixXd intraday(J, m);
    for (int j = 0; j < J; ++j) {
      Eigen::VectorXd z(m);
      for (int i = 0; i < m; ++i) z(i) = normal(rng);
      Eigen::VectorXd r = chol * z;
      intraday.row(j) = r.transpose();
      path.row(j + 1) = path.row(j) + r.transpose() / 100.0;
    }

    // Realized correlation of the latent returns drives tomorrow's R.
    Eigen::MatrixXd rv = intraday.transpose() * intraday;
    Eigen::MatrixXd p_hat = R;
    if ((rv.diagonal().array() > 0.0).all()) p_hat = realized_correlation(rv);

    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= J; ++j) {
        std::int64_t tod = std::min(session.end_ns,
                                    session.start_ns + j * spacing + jitter(rng));
        double lp = path(j, i);
        if (spec.noise_scale > 0.0) lp += spec.noise_scale * normal(rng);
        LocalTimestamp ts;
        ts.offset_sec = kOffsetSec;
        ts.utc_ns = static_cast<std::int64_t>(date.days()) * kNsPerDay + tod -
                    static_cast<std::int64_t>(kOffsetSec) * kNsPerSec;
        ticks += format_timestamp(ts);
        ticks.push_back(',');
        ticks += tickers[static_cast<size_t>(i)];
        ticks.push_back(',');
        ticks += fmt_double(std::exp(lp));
        ticks.push_back('\n');
      }
      bars += date.to_string() + "," + tickers[static_cast<size_t>(i)] + "," +
              fmt_double(std::exp(path(0, i))) + "," +
              fmt_double(std::exp(path(J, i))) + "\n";
    }

    log_price = path.row(J).transpose();

    // Advance the latent state.
    for (int i = 0; i < m; ++i)
      log_v(i) = (1.0 - spec.var_phi) * log_vbar(i) + spec.var_phi * log_v(i) +
                 spec.var_noise * normal(rng);
    R = ((1.0 - a2 - b2) * rbar + a2 * p_hat + b2 * R).eval();
    R.diagonal().setOnes();

    date = next_business_day(date);
  }

  SyntheticFiles files;
  files.ticks = out_dir + "/ticks.csv";
  files.bars = out_dir + "/bars.csv";
  files.true_cov = out_dir + "/true_cov.csv";
  files.true_weights = out_dir + "/true_weights.csv";
  write_file(files.ticks, ticks);
  write_file(files.bars, bars);
  save_cov_series(true_cov, files.true_cov);
  save_weight_series(true_w, files.true_weights);
  return files;
}

SyntheticSpec load_synthetic_spec(const std::string& path) {
  SyntheticSpec spec;
  auto lines = read_lines(path);
  for (size_t k = 0; k < lines.size(); ++k) {
    if (lines[k].empty() || lines[k][0] == '#') continue;
    long lineno = static_cast<long>(k + 1);
    auto eq = lines[k].find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value in spec file");
    std::string key = lines[k].substr(0, eq);
    std::string value = lines[k].substr(eq + 1);
    if (key == "assets")
      spec.assets = static_cast<int>(parse_long_field(value, lineno));
    else if (key == "days")
      spec.days = static_cast<int>(parse_long_field(value, lineno));
    else if (key == "intraday_points")
      spec.intraday_points = static_cast<int>(parse_long_field(value, lineno));
    else if (key == "start")
      spec.start = Date::parse(value);
    else if (key == "var_mean") {
      spec.var_mean.clear();
      for (const auto& f : split_csv(value))
        spec.var_mean.push_back(parse_double_field(f, lineno));
    } else if (key == "var_phi")
      spec.var_phi = parse_double_field(value, lineno);
    else if (key == "var_noise")
      spec.var_noise = parse_double_field(value, lineno);
    else if (key == "corr_mean")
      spec.corr_mean = parse_double_field(value, lineno);
    else if (key == "corr_a")
      spec.corr_a = parse_double_field(value, lineno);
    else if (key == "corr_b")
      spec.corr_b = parse_double_field(value, lineno);
    else if (key == "noise_scale")
      spec.noise_scale = parse_double_field(value, lineno);
    else if (key == "seed")
      spec.seed = static_cast<std::uint64_t>(parse_long_field(value, lineno));
    else
      throw ConfigError("unknown key in synthetic spec: " + key);
  }
  validate(spec);
  return spec;
}

}  // namespace dcw

#include "dcw/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <sstream>

#include "dcw/errors.hpp"
#include "dcw/io_util.hpp"
#include "dcw/models.hpp"
#include "dcw/persist.hpp"

namespace dcw {
namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";
constexpr double kInf = std::numeric_limits<double>::infinity();

const std::vector<Strategy> kStrategyOrder = {
    Strategy::Naive, Strategy::VT, Strategy::RW, Strategy::DCC, Strategy::DCW};

std::string ec_label(double ec) {
  return std::isinf(ec) ? std::string("inf") : fmt_double(ec);
}

json ec_to_json(double ec) {
  if (std::isinf(ec)) return "inf";
  return ec;
}

double ec_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw ConfigError("exposure cap must be a number or \"inf\"");
  }
  if (!j.is_number()) throw ConfigError("exposure cap must be a number or \"inf\"");
  return j.get<double>();
}

bool contains(const std::vector<Strategy>& v, Strategy s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Naive: return "Naive";
    case Strategy::VT: return "VT";
    case Strategy::RW: return "RW";
    case Strategy::DCC: return "DCC";
    case Strategy::DCW: return "DCW";
  }
  throw ConfigError("unhandled strategy enum");
}

Strategy strategy_from_string(const std::string& name) {
  for (Strategy s : kStrategyOrder)
    if (to_string(s) == name) return s;
  throw ConfigError("unknown strategy: " + name);
}

bool uses_exposure_grid(Strategy s) {
  return s == Strategy::RW || s == Strategy::DCC || s == Strategy::DCW;
}

namespace {

void validate_config(const BacktestConfig& cfg) {
  if (cfg.tickers.empty()) throw ConfigError("tickers must be non-empty");
  std::set<std::string> seen(cfg.tickers.begin(), cfg.tickers.end());
  if (seen.size() != cfg.tickers.size())
    throw ConfigError("duplicate ticker in config");
  if (!cfg.sectors.empty() && cfg.sectors.size() != cfg.tickers.size())
    throw ConfigError("sectors must cover every ticker");
  if (cfg.strategies.empty()) throw ConfigError("strategy list must be non-empty");
  std::set<Strategy> sset(cfg.strategies.begin(), cfg.strategies.end());
  if (sset.size() != cfg.strategies.size())
    throw ConfigError("duplicate strategy in config");
  if (cfg.ec_grid.empty()) throw ConfigError("exposure grid must be non-empty");
  for (double ec : cfg.ec_grid)
    if (!(ec >= 1.0)) throw ConfigError("exposure caps must be >= 1");
  for (size_t i = 1; i < cfg.ec_grid.size(); ++i)
    if (!(cfg.ec_grid[i] > cfg.ec_grid[i - 1]))
      throw ConfigError("exposure grid must be strictly increasing");
  if (cfg.is_years < 1) throw ConfigError("is_years must be >= 1");
  if (cfg.oos_years < 1) throw ConfigError("oos_years must be >= 1");
  if (!(cfg.eval.gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (cfg.eval.tau_pct < 0.0) throw ConfigError("tau_bp must be >= 0");
  if (!(cfg.clean.mad_k > 0.0)) throw ConfigError("mad_k must be positive");
  if (cfg.clean.mad_window < 3) throw ConfigError("mad_window must be >= 3");
  if (cfg.clean.session.start_ns >= cfg.clean.session.end_ns)
    throw ConfigError("session start must precede session end");
  if (cfg.bin_minutes < 1) throw ConfigError("bin_minutes must be >= 1");
  if (!(cfg.return_scale > 0.0)) throw ConfigError("return_scale must be positive");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
}

}  // namespace

BacktestConfig load_backtest_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");

  BacktestConfig cfg;
  cfg.strategies = kStrategyOrder;
  cfg.ec_grid = {1.0, kInf};
  std::map<std::string, std::string> sector_map;

  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "ticks") cfg.ticks_path = value.get<std::string>();
      else if (key == "bars") cfg.bars_path = value.get<std::string>();
      else if (key == "covariances") cfg.covariances_path = value.get<std::string>();
      else if (key == "tickers") cfg.tickers = value.get<std::vector<std::string>>();
      else if (key == "sectors")
        sector_map = value.get<std::map<std::string, std::string>>();
      else if (key == "is_years") cfg.is_years = value.get<int>();
      else if (key == "oos_years") cfg.oos_years = value.get<int>();
      else if (key == "strategies") {
        cfg.strategies.clear();
        for (const auto& name : value)
          cfg.strategies.push_back(strategy_from_string(name.get<std::string>()));
      } else if (key == "ec_grid") {
        cfg.ec_grid.clear();
        for (const auto& e : value) cfg.ec_grid.push_back(ec_from_json(e));
      } else if (key == "gamma") cfg.eval.gamma = value.get<double>();
      else if (key == "tau_bp") cfg.eval.tau_pct = value.get<double>() / 100.0;
      else if (key == "mad_k") cfg.clean.mad_k = value.get<double>();
      else if (key == "mad_window") cfg.clean.mad_window = value.get<int>();
      else if (key == "session_start")
        cfg.clean.session.start_ns = parse_time_of_day(value.get<std::string>());
      else if (key == "session_end")
        cfg.clean.session.end_ns = parse_time_of_day(value.get<std::string>());
      else if (key == "bin_minutes") cfg.bin_minutes = value.get<int>();
      else if (key == "return_scale") cfg.return_scale = value.get<double>();
      else if (key == "dcw_feedback") {
        std::string mode = value.get<std::string>();
        if (mode == "raw") cfg.dcw_raw_feedback = true;
        else if (mode == "normalized") cfg.dcw_raw_feedback = false;
        else throw ConfigError("dcw_feedback must be \"raw\" or \"normalized\"");
      } else if (key == "solver") {
        for (const auto& [sk, sv] : value.items()) {
          if (sk == "feas_tol") cfg.solver.feas_tol = sv.get<double>();
          else if (sk == "kkt_tol") cfg.solver.kkt_tol = sv.get<double>();
          else if (sk == "max_iter") cfg.solver.max_iter = sv.get<int>();
          else if (sk == "tie_break") cfg.solver.tie_break = sv.get<double>();
          else throw ConfigError("unknown solver key: " + sk);
        }
      } else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "threads") cfg.threads = value.get<int>();
      else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
      else throw ConfigError("unknown config key: " + key);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config value type mismatch: ") + e.what());
  }

  if (!sector_map.empty()) {
    for (const auto& [ticker, sector] : sector_map)
      if (std::find(cfg.tickers.begin(), cfg.tickers.end(), ticker) ==
          cfg.tickers.end())
        throw ConfigError("sector entry for unknown ticker: " + ticker);
    for (const auto& ticker : cfg.tickers) {
      auto it = sector_map.find(ticker);
      if (it == sector_map.end())
        throw ConfigError("sectors must cover every ticker; missing " + ticker);
      cfg.sectors.push_back(it->second);
    }
  }

  validate_config(cfg);
  return cfg;
}

std::string config_digest(const BacktestConfig& cfg) {
  std::string s;
  auto add = [&s](const std::string& k, const std::string& v) {
    s += k;
    s.push_back('=');
    s += v;
    s.push_back(';');
  };
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) out.push_back(',');
      out += v[i];
    }
    return out;
  };
  add("ticks", cfg.ticks_path);
  add("bars", cfg.bars_path);
  add("covariances", cfg.covariances_path);
  add("tickers", join(cfg.tickers));
  add("sectors", join(cfg.sectors));
  add("is_years", std::to_string(cfg.is_years));
  add("oos_years", std::to_string(cfg.oos_years));
  {
    std::string v;
    for (Strategy st : cfg.strategies) {
      if (!v.empty()) v.push_back(',');
      v += to_string(st);
    }
    add("strategies", v);
  }
  {
    std::string v;
    for (double ec : cfg.ec_grid) {
      if (!v.empty()) v.push_back(',');
      v += ec_label(ec);
    }
    add("ec_grid", v);
  }
  add("gamma", fmt_double(cfg.eval.gamma));
  add("tau_pct", fmt_double(cfg.eval.tau_pct));
  add("bp", fmt_double(cfg.eval.bp));
  add("mad_k", fmt_double(cfg.clean.mad_k));
  add("mad_window", std::to_string(cfg.clean.mad_window));
  add("session", std::to_string(cfg.clean.session.start_ns) + "-" +
                     std::to_string(cfg.clean.session.end_ns));
  add("bin_minutes", std::to_string(cfg.bin_minutes));
  add("return_scale", fmt_double(cfg.return_scale));
  add("dcw_feedback", cfg.dcw_raw_feedback ? "raw" : "normalized");
  add("solver", fmt_double(cfg.solver.feas_tol) + "," + fmt_double(cfg.solver.kkt_tol) +
                    "," + std::to_string(cfg.solver.max_iter) + "," +
                    fmt_double(cfg.solver.tie_break));
  add("seed", std::to_string(cfg.seed));
  add("threads", std::to_string(cfg.threads));
  add("out_dir", cfg.out_dir);
  return fnv1a_hex(s);
}

CovMatrixSeries covariance_from_ticks(const BacktestConfig& cfg, CleanStats* stats) {
  if (cfg.ticks_path.empty())
    throw ConfigError("a tick file is required to build covariances");
  TickPanel panel = load_ticks(cfg.ticks_path, cfg.clean.session);
  panel = clean_ticks(panel, cfg.clean, stats);

  // Restrict to the configured universe, in config order.
  TickPanel selected;
  for (const auto& ticker : cfg.tickers) {
    auto it = std::find_if(panel.begin(), panel.end(),
                           [&](const TickSeries& s) { return s.ticker == ticker; });
    if (it == panel.end() || it->ticks.empty())
      throw DataError("no usable ticks for configured ticker " + ticker);
    selected.push_back(*it);
  }

  CovMatrixSeries series;
  series.tickers = cfg.tickers;
  for (const auto& day : group_by_day(selected)) {
    DayStreams ordered;
    ordered.date = day.date;
    for (const auto& ticker : cfg.tickers) {
      auto it = std::find_if(
          day.streams.begin(), day.streams.end(),
          [&](const TickSeries& s) { return s.ticker == ticker; });
      if (it == day.streams.end())
        throw DataError("ticker " + ticker + " has no ticks on " +
                        day.date.to_string());
      ordered.streams.push_back(*it);
    }
    ReturnPanel r = intraday_returns(refresh_time_sync(ordered));
    r.r *= cfg.return_scale;
    ReturnPanel binned = bin_returns(ordered, cfg.clean.session, cfg.bin_minutes);
    binned.r *= cfg.return_scale;
    KernelResult kernel = realized_kernel(r, binned);
    RepairResult repair = ensure_invertible(kernel.cov);
    CovEntry entry;
    entry.date = day.date;
    entry.cov = repair.cov;
    entry.psd = kernel.psd;
    entry.repaired = repair.repaired;
    entry.ridge = repair.ridge;
    series.entries.push_back(entry);
  }
  return series;
}

namespace {

// Per-day derived quantities shared by every strategy.
struct DayData {
  std::vector<Date> dates;
  std::vector<Eigen::MatrixXd> cov;   // realized measures, evaluation input
  std::vector<Eigen::MatrixXd> inv;   // invertible versions for weight math
  std::vector<Eigen::MatrixXd> corr;  // realized correlations
  Eigen::MatrixXd var;                // T x M realized variances
  Eigen::MatrixXd nu;                 // T x M realized min-variance weights
};

struct Window {
  int first_oos_year = 0;
  long is_begin = 0, is_end = 0;    // day-index ranges, [begin, end)
  long oos_begin = 0, oos_end = 0;
};

DayData build_day_data(const CovMatrixSeries& series) {
  DayData dd;
  const long T = static_cast<long>(series.entries.size());
  const Eigen::Index m = series.entries.empty() ? 0 : series.entries[0].cov.rows();
  dd.var.resize(T, m);
  dd.nu.resize(T, m);
  for (long t = 0; t < T; ++t) {
    const CovEntry& e = series.entries[static_cast<size_t>(t)];
    dd.dates.push_back(e.date);
    dd.cov.push_back(e.cov);
    Eigen::MatrixXd fixed = ensure_invertible(e.cov).cov;
    dd.inv.push_back(fixed);
    dd.corr.push_back(realized_correlation(fixed));
    dd.var.row(t) = e.cov.diagonal().transpose();
    dd.nu.row(t) = realized_weights(fixed).transpose();
  }
  return dd;
}

std::vector<Window> build_windows(const std::vector<Date>& dates, int is_years,
                                  int oos_years) {
  std::vector<int> years;
  std::vector<long> year_begin;
  for (long t = 0; t < static_cast<long>(dates.size()); ++t) {
    int y = dates[static_cast<size_t>(t)].year();
    if (years.empty() || y != years.back()) {
      years.push_back(y);
      year_begin.push_back(t);
    }
  }
  year_begin.push_back(static_cast<long>(dates.size()));

  std::vector<Window> windows;
  for (size_t k = 0; k + static_cast<size_t>(is_years + oos_years) <= years.size();
       k += static_cast<size_t>(oos_years)) {
    Window w;
    w.first_oos_year = years[k + static_cast<size_t>(is_years)];
    w.is_begin = year_begin[k];
    w.is_end = year_begin[k + static_cast<size_t>(is_years)];
    w.oos_begin = w.is_end;
    w.oos_end = year_begin[k + static_cast<size_t>(is_years + oos_years)];
    windows.push_back(w);
  }
  if (windows.empty())
    throw ConfigError("not enough calendar years for one window: have " +
                      std::to_string(years.size()) + ", need " +
                      std::to_string(is_years + oos_years));
  return windows;
}

Eigen::VectorXd inverse_variance_weights(const Eigen::VectorXd& variances) {
  Eigen::VectorXd inv = variances.cwiseInverse();
  return inv / inv.sum();
}

std::string path_name(Strategy s, double ec) {
  return to_string(s) + "@" + ec_label(ec);
}

}  // namespace

BacktestReport run_backtest(const BacktestConfig& cfg) {
  validate_config(cfg);
  if (cfg.bars_path.empty())
    throw ConfigError("a daily bar file is required for exact turnover");
  ensure_dir(cfg.out_dir);

  CovMatrixSeries series;
  if (!cfg.covariances_path.empty()) {
    series = load_cov_series(cfg.covariances_path, &cfg.tickers);
  } else {
    series = covariance_from_ticks(cfg);
    save_cov_series(series, cfg.out_dir + "/covariances.csv");
  }
  if (series.entries.empty()) throw DataError("covariance series is empty");

  const Eigen::Index m = static_cast<Eigen::Index>(cfg.tickers.size());
  DayData dd = build_day_data(series);
  std::vector<Window> windows = build_windows(dd.dates, cfg.is_years, cfg.oos_years);

  DailyBarPanel bars = load_daily_bars(cfg.bars_path);
  std::map<std::int32_t, long> bar_row;
  for (long t = 0; t < static_cast<long>(bars.dates.size()); ++t)
    bar_row[bars.dates[static_cast<size_t>(t)].days()] = t;
  std::vector<Eigen::Index> bar_col(static_cast<size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    auto it = std::find(bars.tickers.begin(), bars.tickers.end(),
                        cfg.tickers[static_cast<size_t>(i)]);
    if (it == bars.tickers.end())
      throw DataError("bars missing ticker " + cfg.tickers[static_cast<size_t>(i)]);
    bar_col[static_cast<size_t>(i)] = it - bars.tickers.begin();
  }

  const bool has_vt = contains(cfg.strategies, Strategy::VT);
  const bool has_rw = contains(cfg.strategies, Strategy::RW);
  const bool has_dcc = contains(cfg.strategies, Strategy::DCC);
  const bool has_dcw = contains(cfg.strategies, Strategy::DCW);
  const bool need_har = has_vt || has_dcc;

  long min_is_days = 1;
  if (need_har) min_is_days = std::max(min_is_days, 33L);
  if (has_dcc || has_dcw) min_is_days = std::max(min_is_days, 30L);
  for (const Window& w : windows)
    if (w.is_end - w.is_begin < min_is_days)
      throw ConfigError("estimation window before " +
                        std::to_string(w.first_oos_year) + " has " +
                        std::to_string(w.is_end - w.is_begin) +
                        " days; the configured strategies need " +
                        std::to_string(min_is_days));

  // Path table: Naive and VT live at cap 1 only; RW/DCC/DCW span the grid.
  struct PathRun {
    Strategy s;
    double ec;
    Eigen::MatrixXd held;
    WarmStart warm;
    bool warm_ready = false;
  };
  long n_oos = 0;
  for (const Window& w : windows) n_oos += w.oos_end - w.oos_begin;

  std::vector<PathRun> runs;
  for (Strategy s : kStrategyOrder) {
    if (!contains(cfg.strategies, s)) continue;
    std::vector<double> ecs =
        uses_exposure_grid(s) ? cfg.ec_grid : std::vector<double>{1.0};
    for (double ec : ecs) {
      PathRun run;
      run.s = s;
      run.ec = ec;
      run.held.resize(n_oos, m);
      runs.push_back(std::move(run));
    }
  }
  std::map<Strategy, Eigen::MatrixXd> forecast;
  for (Strategy s : cfg.strategies) forecast[s] = Eigen::MatrixXd(n_oos, m);

  std::vector<Date> oos_dates;
  Eigen::MatrixXd oc(n_oos, m);
  Eigen::MatrixXd nu_oos(n_oos, m);
  BacktestReport rep;
  rep.version = kVersion;
  rep.config_digest = config_digest(cfg);
  rep.tickers = cfg.tickers;

  ensure_dir(cfg.out_dir + "/params");
  ensure_dir(cfg.out_dir + "/weights");
  const Eigen::VectorXd w_naive = naive_weights(m);

  long row = 0;
  for (const Window& w : windows) {
    // Window fits.
    ModelParams mp;
    mp.tickers = cfg.tickers;
    std::vector<HarParams> har(static_cast<size_t>(m));
    DccParams dccp;
    DcwParams dcwp;
    try {
      if (need_har) {
        mp.har.emplace();
        for (Eigen::Index i = 0; i < m; ++i) {
          std::span<const double> is_var(dd.var.col(i).data() + w.is_begin,
                                         static_cast<size_t>(w.is_end - w.is_begin));
          har[static_cast<size_t>(i)] = har_fit(is_var);
          (*mp.har)[cfg.tickers[static_cast<size_t>(i)]] =
              har[static_cast<size_t>(i)];
        }
      }
      if (has_dcc) {
        std::vector<Eigen::MatrixXd> is_corr(
            dd.corr.begin() + w.is_begin, dd.corr.begin() + w.is_end);
        dccp = dcc_fit(is_corr).params;
        mp.dcc = dccp;
      }
      if (has_dcw) {
        dcwp = dcw_fit(dd.nu.middleRows(w.is_begin, w.is_end - w.is_begin)).params;
        mp.dcw = dcwp;
      }
    } catch (const NumericError& e) {
      throw FitError("window before " + std::to_string(w.first_oos_year) + ": " +
                     e.what());
    }
    save_model_params(mp, cfg.out_dir + "/params/window_" +
                              std::to_string(w.first_oos_year) + ".txt");

    // In-sample one-step fit quality of the weight recursion.
    if (has_dcw) {
      const long is_days = w.is_end - w.is_begin;
      Eigen::MatrixXd fitted(is_days - 1, m);
      Eigen::VectorXd state = dcwp.omega_bar;
      for (long t = w.is_begin + 1; t < w.is_end; ++t) {
        DcwForecast fc =
            dcw_forecast(dcwp, dd.nu.row(t - 1).transpose(), state);
        fitted.row(t - w.is_begin - 1) = fc.raw.transpose();
        state = fc.raw;
      }
      R2Result r2 = is_r2(fitted, dd.nu.middleRows(w.is_begin + 1, is_days - 1));
      IsR2Block blk;
      blk.first_oos_year = w.first_oos_year;
      double sum = 0.0;
      long defined = 0;
      for (Eigen::Index i = 0; i < m; ++i) {
        blk.r2.push_back(r2.r2(i));
        if (!r2.undefined[static_cast<size_t>(i)]) {
          sum += r2.r2(i);
          ++defined;
        }
      }
      blk.mean = defined > 0 ? sum / static_cast<double>(defined)
                             : std::numeric_limits<double>::quiet_NaN();
      rep.r2_is.push_back(blk);
    }

    // Forecast fold: recursions roll through IS, weights emitted over OOS.
    Eigen::MatrixXd r_state;
    if (has_dcc) r_state = dccp.pbar;
    Eigen::VectorXd dcw_state;
    if (has_dcw) dcw_state = dcwp.omega_bar;

    for (long t = w.is_begin + 1; t < w.oos_end; ++t) {
      DcwForecast dcw_fc;
      if (has_dcc)
        r_state = dcc_forecast(dccp, dd.corr[static_cast<size_t>(t - 1)], r_state);
      if (has_dcw) {
        dcw_fc = dcw_forecast(dcwp, dd.nu.row(t - 1).transpose(), dcw_state);
        dcw_state = cfg.dcw_raw_feedback ? dcw_fc.raw : dcw_fc.normalized;
      }
      if (t < w.oos_begin) continue;

      const Date date = dd.dates[static_cast<size_t>(t)];
      try {
        Eigen::VectorXd hvar;
        if (need_har) {
          hvar.resize(m);
          for (Eigen::Index i = 0; i < m; ++i) {
            std::span<const double> hist(dd.var.col(i).data(),
                                         static_cast<size_t>(t));
            hvar(i) = har_forecast(har[static_cast<size_t>(i)], hist).value;
          }
        }
        const Eigen::MatrixXd& omega_rw = dd.inv[static_cast<size_t>(t - 1)];
        Eigen::MatrixXd omega_dcc;
        if (has_dcc) omega_dcc = dcc_covariance(r_state, hvar);

        for (PathRun& run : runs) {
          switch (run.s) {
            case Strategy::Naive:
              run.held.row(row) = w_naive.transpose();
              break;
            case Strategy::VT:
              run.held.row(row) = inverse_variance_weights(hvar).transpose();
              break;
            case Strategy::RW:
            case Strategy::DCC: {
              const Eigen::MatrixXd& omega =
                  run.s == Strategy::RW ? omega_rw : omega_dcc;
              AllocationResult res = constrained_min_variance(
                  omega, run.ec, cfg.solver, run.warm_ready ? &run.warm : nullptr);
              run.held.row(row) = res.weights.transpose();
              run.warm = res.state;
              run.warm_ready = true;
              break;
            }
            case Strategy::DCW:
              run.held.row(row) =
                  std::isinf(run.ec)
                      ? dcw_fc.normalized.transpose()
                      : project_to_exposure(dcw_fc.normalized, run.ec, cfg.solver)
                            .transpose();
              break;
          }
        }
        for (Strategy s : cfg.strategies) {
          Eigen::MatrixXd& f = forecast[s];
          switch (s) {
            case Strategy::Naive: f.row(row) = w_naive.transpose(); break;
            case Strategy::VT:
              f.row(row) = inverse_variance_weights(hvar).transpose();
              break;
            case Strategy::RW:
              f.row(row) = min_variance(omega_rw).transpose();
              break;
            case Strategy::DCC:
              f.row(row) = min_variance(omega_dcc).transpose();
              break;
            case Strategy::DCW: f.row(row) = dcw_fc.normalized.transpose(); break;
          }
        }
      } catch (const NumericError& e) {
        throw NumericError("on " + date.to_string() + ": " + e.what());
      } catch (const DataError& e) {
        throw DataError("on " + date.to_string() + ": " + e.what());
      }

      auto bit = bar_row.find(date.days());
      if (bit == bar_row.end())
        throw DataError("bars missing date " + date.to_string());
      for (Eigen::Index i = 0; i < m; ++i)
        oc(row, i) = bars.oc_return(bit->second, bar_col[static_cast<size_t>(i)]);
      nu_oos.row(row) = dd.nu.row(t);
      oos_dates.push_back(date);
      ++row;
    }
  }

  // Year boundaries over the OOS span.
  std::vector<long> ybegin;
  for (long t = 0; t < n_oos; ++t) {
    int y = oos_dates[static_cast<size_t>(t)].year();
    if (rep.years.empty() || y != rep.years.back()) {
      rep.years.push_back(y);
      ybegin.push_back(t);
    }
  }
  ybegin.push_back(n_oos);
  for (size_t k = 0; k + 1 < ybegin.size(); ++k)
    rep.days_by_year.push_back(ybegin[k + 1] - ybegin[k]);

  // Evaluate every path.
  std::map<std::int32_t, long> oos_row;
  for (long t = 0; t < n_oos; ++t)
    oos_row[oos_dates[static_cast<size_t>(t)].days()] = t;
  std::vector<long> day_of_oos;  // OOS row -> global day index
  {
    long r2 = 0;
    for (const Window& w : windows)
      for (long t = w.oos_begin; t < w.oos_end; ++t, ++r2) day_of_oos.push_back(t);
  }

  for (PathRun& run : runs) {
    StrategyPath path;
    path.strategy = run.s;
    path.ec = run.ec;
    Eigen::VectorXd q(n_oos), g(n_oos), x(n_oos);
    for (long t = 0; t < n_oos; ++t) {
      const Eigen::MatrixXd& S = dd.cov[static_cast<size_t>(day_of_oos[static_cast<size_t>(t)])];
      Eigen::VectorXd wt = run.held.row(t).transpose();
      q(t) = wt.dot(S * wt);
      g(t) = wt.cwiseAbs().sum();
      x(t) = 0.5 * ((2.0 + oc.row(t).array()) * wt.array().abs().transpose()).sum();
    }
    for (size_t k = 0; k + 1 < ybegin.size(); ++k) {
      long len = ybegin[k + 1] - ybegin[k];
      path.pv_by_year.push_back(q.segment(ybegin[k], len).mean());
      path.to_by_year.push_back(g.segment(ybegin[k], len).mean());
      path.tox_by_year.push_back(x.segment(ybegin[k], len).mean());
    }
    path.pv = q.mean();
    path.to = g.mean();
    path.to_exact = x.mean();
    rep.paths.push_back(path);

    WeightSeries ws;
    ws.dates = oos_dates;
    ws.tickers = cfg.tickers;
    ws.w = run.held;
    save_weight_series(ws, cfg.out_dir + "/weights/" + to_string(run.s) + "_" +
                               ec_label(run.ec) + ".csv");
  }
  {
    WeightSeries ws;
    ws.dates = oos_dates;
    ws.tickers = cfg.tickers;
    ws.w = nu_oos;
    save_weight_series(ws, cfg.out_dir + "/weights/realized.csv");
  }

  auto find_path = [&rep](Strategy s, double ec) -> const StrategyPath* {
    for (const StrategyPath& p : rep.paths)
      if (p.strategy == s &&
          ((std::isinf(p.ec) && std::isinf(ec)) || p.ec == ec))
        return &p;
    return nullptr;
  };

  // Consecutive-strategy switching diagnostics at every cap.
  std::vector<Strategy> present;
  for (Strategy s : kStrategyOrder)
    if (contains(cfg.strategies, s)) present.push_back(s);
  std::set<std::string> pair_seen;
  for (size_t k = 0; k + 1 < present.size(); ++k) {
    Strategy a = present[k], b = present[k + 1];
    for (double ec : cfg.ec_grid) {
      double fa = uses_exposure_grid(a) ? ec : 1.0;
      double fb = uses_exposure_grid(b) ? ec : 1.0;
      std::string key = path_name(a, fa) + ">" + path_name(b, fb);
      if (!pair_seen.insert(key).second) continue;
      const StrategyPath* pa = find_path(a, fa);
      const StrategyPath* pb = find_path(b, fb);
      if (!pa || !pb) continue;
      PairComparison pc;
      pc.from = a;
      pc.to = b;
      pc.from_ec = fa;
      pc.to_ec = fb;
      pc.dpv = pa->pv - pb->pv;
      pc.dto = pa->to - pb->to;
      pc.ceq_bp = ceq(pa->pv, pb->pv, cfg.eval);
      pc.nceq_bp = nceq(pa->pv, pb->pv, pa->to, pb->to, cfg.eval);
      pc.betc = betc(pa->pv, pb->pv, pa->to, pb->to, cfg.eval);
      rep.pairs.push_back(pc);
    }
  }

  // Weight-forecast precision.
  for (Strategy s : present) {
    R2Result r2 = oos_r2(forecast[s], nu_oos);
    R2Block blk;
    blk.strategy = s;
    for (Eigen::Index i = 0; i < m; ++i) {
      blk.r2.push_back(r2.r2(i));
      blk.undefined.push_back(r2.undefined[static_cast<size_t>(i)]);
    }
    rep.r2_oos.push_back(blk);
  }

  // Net-utility envelopes across caps; VT at cap 1 is the reference line.
  const StrategyPath* vt_path = find_path(Strategy::VT, 1.0);
  for (Strategy s : present) {
    EnvelopeBlock blk;
    blk.strategy = s;
    blk.ecs = uses_exposure_grid(s) ? cfg.ec_grid : std::vector<double>{1.0};
    std::vector<double> pvs, tos;
    for (double ec : blk.ecs) {
      const StrategyPath* p = find_path(s, ec);
      pvs.push_back(p->pv);
      tos.push_back(p->to);
    }
    blk.envelope = utility_envelope(pvs, tos, cfg.eval);
    if (vt_path) {
      for (size_t k = 0; k < blk.envelope.tau_bp.size(); ++k) {
        double tau_pct = blk.envelope.tau_bp[k] / cfg.eval.bp;
        double vt_line = -2.0 * tau_pct * vt_path->to - 0.5 * vt_path->pv;
        blk.diff_vs_vt.push_back(blk.envelope.value[k] - vt_line);
      }
    }
    rep.envelopes.push_back(blk);
  }

  // Sector aggregation when a sector map is configured.
  if (!cfg.sectors.empty()) {
    AssetMeta meta;
    meta.tickers = cfg.tickers;
    meta.sectors = cfg.sectors;
    for (const PathRun& run : runs) {
      SectorImportance si = sector_importance(run.held, cfg.tickers, meta);
      SectorBlock blk;
      blk.strategy = run.s;
      blk.ec = run.ec;
      blk.sectors = si.sectors;
      blk.dates = oos_dates;
      blk.daily = si.daily_share;
      blk.average = si.average;
      rep.sectors.push_back(blk);
    }
  }

  return rep;
}

namespace {

json report_to_json(const BacktestReport& rep) {
  json j;
  j["version"] = rep.version;
  j["config_digest"] = rep.config_digest;
  j["tickers"] = rep.tickers;
  j["years"] = rep.years;
  j["days_by_year"] = rep.days_by_year;
  j["paths"] = json::array();
  for (const StrategyPath& p : rep.paths) {
    json e;
    e["strategy"] = to_string(p.strategy);
    e["ec"] = ec_to_json(p.ec);
    e["pv_by_year"] = p.pv_by_year;
    e["to_by_year"] = p.to_by_year;
    e["tox_by_year"] = p.tox_by_year;
    e["pv"] = p.pv;
    e["to"] = p.to;
    e["to_exact"] = p.to_exact;
    j["paths"].push_back(e);
  }
  j["pairs"] = json::array();
  for (const PairComparison& p : rep.pairs) {
    json e;
    e["from"] = to_string(p.from);
    e["to"] = to_string(p.to);
    e["from_ec"] = ec_to_json(p.from_ec);
    e["to_ec"] = ec_to_json(p.to_ec);
    e["dpv"] = p.dpv;
    e["dto"] = p.dto;
    e["ceq_bp"] = p.ceq_bp;
    e["nceq_bp"] = p.nceq_bp;
    e["betc"] = to_string(p.betc.kind);
    e["betc_threshold_bp"] = p.betc.threshold_bp;
    j["pairs"].push_back(e);
  }
  j["r2_oos"] = json::array();
  for (const R2Block& b : rep.r2_oos) {
    json e;
    e["strategy"] = to_string(b.strategy);
    json vals = json::array();
    for (size_t i = 0; i < b.r2.size(); ++i)
      vals.push_back(b.undefined[i] ? json() : json(b.r2[i]));
    e["r2"] = vals;
    j["r2_oos"].push_back(e);
  }
  j["r2_is"] = json::array();
  for (const IsR2Block& b : rep.r2_is) {
    json e;
    e["first_oos_year"] = b.first_oos_year;
    e["r2"] = b.r2;
    e["mean"] = b.mean;
    j["r2_is"].push_back(e);
  }
  j["envelopes"] = json::array();
  for (const EnvelopeBlock& b : rep.envelopes) {
    json e;
    e["strategy"] = to_string(b.strategy);
    json ecs = json::array();
    for (double ec : b.ecs) ecs.push_back(ec_to_json(ec));
    e["ecs"] = ecs;
    e["tau_bp"] = b.envelope.tau_bp;
    e["value"] = b.envelope.value;
    e["winner"] = b.envelope.winner;
    e["breakpoints_bp"] = b.envelope.breakpoints_bp;
    e["diff_vs_vt"] = b.diff_vs_vt;
    j["envelopes"].push_back(e);
  }
  j["sectors"] = json::array();
  for (const SectorBlock& b : rep.sectors) {
    json e;
    e["strategy"] = to_string(b.strategy);
    e["ec"] = ec_to_json(b.ec);
    e["sectors"] = b.sectors;
    json dates = json::array();
    for (const Date& d : b.dates) dates.push_back(d.to_string());
    e["dates"] = dates;
    json daily = json::array();
    for (Eigen::Index t = 0; t < b.daily.rows(); ++t) {
      json rowj = json::array();
      for (Eigen::Index sidx = 0; sidx < b.daily.cols(); ++sidx)
        rowj.push_back(b.daily(t, sidx));
      daily.push_back(rowj);
    }
    e["daily"] = daily;
    json avg = json::array();
    for (Eigen::Index sidx = 0; sidx < b.average.size(); ++sidx)
      avg.push_back(b.average(sidx));
    e["average"] = avg;
    j["sectors"].push_back(e);
  }
  return j;
}

BetcResult::Kind betc_kind_from_string(const std::string& s) {
  for (BetcResult::Kind k :
       {BetcResult::Kind::Always, BetcResult::Kind::Never,
        BetcResult::Kind::PreferredBelow, BetcResult::Kind::PreferredAbove})
    if (to_string(k) == s) return k;
  throw DataError("unknown verdict in report: " + s);
}

BacktestReport report_from_json(const json& j) {
  BacktestReport rep;
  rep.version = j.at("version").get<std::string>();
  rep.config_digest = j.at("config_digest").get<std::string>();
  rep.tickers = j.at("tickers").get<std::vector<std::string>>();
  rep.years = j.at("years").get<std::vector<int>>();
  rep.days_by_year = j.at("days_by_year").get<std::vector<long>>();
  for (const json& e : j.at("paths")) {
    StrategyPath p;
    p.strategy = strategy_from_string(e.at("strategy").get<std::string>());
    p.ec = ec_from_json(e.at("ec"));
    p.pv_by_year = e.at("pv_by_year").get<std::vector<double>>();
    p.to_by_year = e.at("to_by_year").get<std::vector<double>>();
    p.tox_by_year = e.at("tox_by_year").get<std::vector<double>>();
    p.pv = e.at("pv").get<double>();
    p.to = e.at("to").get<double>();
    p.to_exact = e.at("to_exact").get<double>();
    rep.paths.push_back(p);
  }
  for (const json& e : j.at("pairs")) {
    PairComparison p;
    p.from = strategy_from_string(e.at("from").get<std::string>());
    p.to = strategy_from_string(e.at("to").get<std::string>());
    p.from_ec = ec_from_json(e.at("from_ec"));
    p.to_ec = ec_from_json(e.at("to_ec"));
    p.dpv = e.at("dpv").get<double>();
    p.dto = e.at("dto").get<double>();
    p.ceq_bp = e.at("ceq_bp").get<double>();
    p.nceq_bp = e.at("nceq_bp").get<double>();
    p.betc.kind = betc_kind_from_string(e.at("betc").get<std::string>());
    p.betc.threshold_bp = e.at("betc_threshold_bp").get<double>();
    rep.pairs.push_back(p);
  }
  for (const json& e : j.at("r2_oos")) {
    R2Block b;
    b.strategy = strategy_from_string(e.at("strategy").get<std::string>());
    for (const json& v : e.at("r2")) {
      if (v.is_null()) {
        b.r2.push_back(std::numeric_limits<double>::quiet_NaN());
        b.undefined.push_back(true);
      } else {
        b.r2.push_back(v.get<double>());
        b.undefined.push_back(false);
      }
    }
    rep.r2_oos.push_back(b);
  }
  for (const json& e : j.at("r2_is")) {
    IsR2Block b;
    b.first_oos_year = e.at("first_oos_year").get<int>();
    for (const json& v : e.at("r2"))
      b.r2.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                 : v.get<double>());
    b.mean = e.at("mean").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                    : e.at("mean").get<double>();
    rep.r2_is.push_back(b);
  }
  for (const json& e : j.at("envelopes")) {
    EnvelopeBlock b;
    b.strategy = strategy_from_string(e.at("strategy").get<std::string>());
    for (const json& ec : e.at("ecs")) b.ecs.push_back(ec_from_json(ec));
    b.envelope.tau_bp = e.at("tau_bp").get<std::vector<double>>();
    b.envelope.value = e.at("value").get<std::vector<double>>();
    b.envelope.winner = e.at("winner").get<std::vector<int>>();
    b.envelope.breakpoints_bp = e.at("breakpoints_bp").get<std::vector<double>>();
    b.diff_vs_vt = e.at("diff_vs_vt").get<std::vector<double>>();
    rep.envelopes.push_back(b);
  }
  for (const json& e : j.at("sectors")) {
    SectorBlock b;
    b.strategy = strategy_from_string(e.at("strategy").get<std::string>());
    b.ec = ec_from_json(e.at("ec"));
    b.sectors = e.at("sectors").get<std::vector<std::string>>();
    for (const json& d : e.at("dates"))
      b.dates.push_back(Date::parse(d.get<std::string>()));
    const json& daily = e.at("daily");
    b.daily.resize(static_cast<Eigen::Index>(daily.size()),
                   static_cast<Eigen::Index>(b.sectors.size()));
    for (Eigen::Index t = 0; t < b.daily.rows(); ++t)
      for (Eigen::Index sidx = 0; sidx < b.daily.cols(); ++sidx)
        b.daily(t, sidx) =
            daily[static_cast<size_t>(t)][static_cast<size_t>(sidx)].get<double>();
    const json& avg = e.at("average");
    b.average.resize(static_cast<Eigen::Index>(avg.size()));
    for (Eigen::Index sidx = 0; sidx < b.average.size(); ++sidx)
      b.average(sidx) = avg[static_cast<size_t>(sidx)].get<double>();
    rep.sectors.push_back(b);
  }
  return rep;
}

std::string betc_glyph(const BetcResult& b) {
  char buf[32];
  switch (b.kind) {
    case BetcResult::Kind::Always: return "A";
    case BetcResult::Kind::Never: return "N";
    case BetcResult::Kind::PreferredBelow:
      std::snprintf(buf, sizeof(buf), "<%.2f", b.threshold_bp);
      return buf;
    case BetcResult::Kind::PreferredAbove:
      std::snprintf(buf, sizeof(buf), ">%.2f", b.threshold_bp);
      return buf;
  }
  return "?";
}

}  // namespace

void save_report(const BacktestReport& rep, const std::string& path) {
  write_file(path, report_to_json(rep).dump(1) + "\n");
}

BacktestReport load_report(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open report: " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw DataError(std::string("report parse failure: ") + e.what());
  }
  try {
    return report_from_json(j);
  } catch (const json::exception& e) {
    throw DataError(std::string("report field failure: ") + e.what());
  }
}

void emit_reports(const BacktestReport& rep, const std::string& dir) {
  ensure_dir(dir);
  save_report(rep, dir + "/summary.json");

  std::string year_cols;
  for (int y : rep.years) year_cols += "," + std::to_string(y);

  auto path_table = [&](auto field_by_year, auto field_all) {
    std::string out = "strategy,ec" + year_cols + ",all\n";
    for (const StrategyPath& p : rep.paths) {
      out += to_string(p.strategy) + "," + ec_label(p.ec);
      const std::vector<double>& by_year = field_by_year(p);
      for (double v : by_year) out += "," + fmt_double(v);
      out += "," + fmt_double(field_all(p)) + "\n";
    }
    return out;
  };
  write_file(dir + "/pv.csv",
             path_table([](const StrategyPath& p) -> const std::vector<double>& { return p.pv_by_year; },
                        [](const StrategyPath& p) { return p.pv; }));
  write_file(dir + "/to.csv",
             path_table([](const StrategyPath& p) -> const std::vector<double>& { return p.to_by_year; },
                        [](const StrategyPath& p) { return p.to; }));
  write_file(dir + "/to_exact.csv",
             path_table([](const StrategyPath& p) -> const std::vector<double>& { return p.tox_by_year; },
                        [](const StrategyPath& p) { return p.to_exact; }));

  {
    std::string out = "from,from_ec,to,to_ec,dpv,dto,ceq_bp,nceq_bp\n";
    for (const PairComparison& p : rep.pairs)
      out += to_string(p.from) + "," + ec_label(p.from_ec) + "," + to_string(p.to) +
             "," + ec_label(p.to_ec) + "," + fmt_double(p.dpv) + "," +
             fmt_double(p.dto) + "," + fmt_double(p.ceq_bp) + "," +
             fmt_double(p.nceq_bp) + "\n";
    write_file(dir + "/ceq.csv", out);
  }
  {
    std::string out = "from,from_ec,to,to_ec,verdict,threshold_bp\n";
    for (const PairComparison& p : rep.pairs) {
      bool has_threshold = p.betc.kind == BetcResult::Kind::PreferredBelow ||
                           p.betc.kind == BetcResult::Kind::PreferredAbove;
      out += to_string(p.from) + "," + ec_label(p.from_ec) + "," + to_string(p.to) +
             "," + ec_label(p.to_ec) + "," + to_string(p.betc.kind) + "," +
             (has_threshold ? fmt_double(p.betc.threshold_bp) : std::string()) +
             "\n";
    }
    write_file(dir + "/betc.csv", out);
  }
  {
    std::string out = "strategy,ticker,r2,undefined\n";
    for (const R2Block& b : rep.r2_oos)
      for (size_t i = 0; i < b.r2.size(); ++i)
        out += to_string(b.strategy) + "," + rep.tickers[i] + "," +
               (b.undefined[i] ? std::string() : fmt_double(b.r2[i])) + "," +
               (b.undefined[i] ? "1" : "0") + "\n";
    write_file(dir + "/r2_oos.csv", out);
  }
  {
    std::string out = "first_oos_year,ticker,r2\n";
    for (const IsR2Block& b : rep.r2_is)
      for (size_t i = 0; i < b.r2.size(); ++i)
        out += std::to_string(b.first_oos_year) + "," + rep.tickers[i] + "," +
               fmt_double(b.r2[i]) + "\n";
    write_file(dir + "/r2_is.csv", out);
  }
  {
    // Histogram cells for the forecast-precision density figure.
    std::string out = "strategy,bin_lo,bin_hi,count\n";
    for (const R2Block& b : rep.r2_oos) {
      constexpr int kBins = 20;
      std::vector<long> counts(kBins, 0);
      for (size_t i = 0; i < b.r2.size(); ++i) {
        if (b.undefined[i]) continue;
        int bin = static_cast<int>(std::floor((b.r2[i] + 1.0) / 0.1));
        bin = std::clamp(bin, 0, kBins - 1);
        ++counts[static_cast<size_t>(bin)];
      }
      for (int k = 0; k < kBins; ++k)
        out += to_string(b.strategy) + "," + fmt_double(-1.0 + 0.1 * k) + "," +
               fmt_double(-1.0 + 0.1 * (k + 1)) + "," +
               std::to_string(counts[static_cast<size_t>(k)]) + "\n";
    }
    write_file(dir + "/r2_hist.csv", out);
  }
  {
    std::string out = "strategy,tau_bp,value,winner_ec,diff_vs_vt\n";
    for (const EnvelopeBlock& b : rep.envelopes)
      for (size_t k = 0; k < b.envelope.tau_bp.size(); ++k)
        out += to_string(b.strategy) + "," + fmt_double(b.envelope.tau_bp[k]) +
               "," + fmt_double(b.envelope.value[k]) + "," +
               ec_label(b.ecs[static_cast<size_t>(b.envelope.winner[k])]) + "," +
               (b.diff_vs_vt.empty() ? std::string()
                                     : fmt_double(b.diff_vs_vt[k])) +
               "\n";
    write_file(dir + "/envelope.csv", out);
  }
  {
    std::string out = "strategy,breakpoint_bp\n";
    for (const EnvelopeBlock& b : rep.envelopes)
      for (double bp : b.envelope.breakpoints_bp)
        out += to_string(b.strategy) + "," + fmt_double(bp) + "\n";
    write_file(dir + "/envelope_breakpoints.csv", out);
  }
  if (!rep.sectors.empty()) {
    std::string out = "strategy,ec,date,sector,share\n";
    for (const SectorBlock& b : rep.sectors)
      for (Eigen::Index t = 0; t < b.daily.rows(); ++t)
        for (Eigen::Index sidx = 0; sidx < b.daily.cols(); ++sidx)
          out += to_string(b.strategy) + "," + ec_label(b.ec) + "," +
                 b.dates[static_cast<size_t>(t)].to_string() + "," +
                 b.sectors[static_cast<size_t>(sidx)] + "," +
                 fmt_double(b.daily(t, sidx)) + "\n";
    write_file(dir + "/sectors.csv", out);
  }
  {
    json manifest;
    manifest["version"] = rep.version;
    manifest["config_digest"] = rep.config_digest;
    manifest["tickers"] = rep.tickers;
    manifest["years"] = rep.years;
    long days = 0;
    for (long d : rep.days_by_year) days += d;
    manifest["oos_days"] = days;
    manifest["paths"] = rep.paths.size();
    std::vector<std::string> strategies;
    for (const R2Block& b : rep.r2_oos) strategies.push_back(to_string(b.strategy));
    manifest["strategies"] = strategies;
    write_file(dir + "/manifest.json", manifest.dump(1) + "\n");
  }
}

std::string report_text(const BacktestReport& rep) {
  std::ostringstream os;
  char buf[160];
  long days = 0;
  for (long d : rep.days_by_year) days += d;
  os << "run " << rep.config_digest << " (library " << rep.version << ")\n";
  os << "assets: " << rep.tickers.size() << ", OOS days: " << days;
  if (!rep.years.empty())
    os << " over " << rep.years.front() << ".." << rep.years.back();
  os << "\n\n";

  os << "day-weighted performance\n";
  std::snprintf(buf, sizeof(buf), "  %-8s %-6s %12s %10s %10s\n", "strategy",
                "ec", "PV", "TO", "TO_exact");
  os << buf;
  for (const StrategyPath& p : rep.paths) {
    std::snprintf(buf, sizeof(buf), "  %-8s %-6s %12.6f %10.4f %10.4f\n",
                  to_string(p.strategy).c_str(), ec_label(p.ec).c_str(), p.pv,
                  p.to, p.to_exact);
    os << buf;
  }
  if (!rep.pairs.empty()) {
    os << "\nstrategy switches (basis points)\n";
    std::snprintf(buf, sizeof(buf), "  %-12s %-12s %9s %9s  %s\n", "from", "to",
                  "CEQ", "NCEQ", "BETC");
    os << buf;
    for (const PairComparison& p : rep.pairs) {
      std::string from = to_string(p.from) + "@" + ec_label(p.from_ec);
      std::string to = to_string(p.to) + "@" + ec_label(p.to_ec);
      std::snprintf(buf, sizeof(buf), "  %-12s %-12s %9.4f %9.4f  %s\n",
                    from.c_str(), to.c_str(), p.ceq_bp, p.nceq_bp,
                    betc_glyph(p.betc).c_str());
      os << buf;
    }
  }
  if (!rep.r2_oos.empty()) {
    os << "\nmean OOS weight-forecast R2\n";
    for (const R2Block& b : rep.r2_oos) {
      double sum = 0.0;
      long n = 0;
      for (size_t i = 0; i < b.r2.size(); ++i)
        if (!b.undefined[i]) {
          sum += b.r2[i];
          ++n;
        }
      std::snprintf(buf, sizeof(buf), "  %-8s %9.4f\n",
                    to_string(b.strategy).c_str(),
                    n > 0 ? sum / static_cast<double>(n)
                          : std::numeric_limits<double>::quiet_NaN());
      os << buf;
    }
  }
  if (!rep.r2_is.empty()) {
    os << "\nmean IS weight-fit R2 by window\n";
    for (const IsR2Block& b : rep.r2_is) {
      std::snprintf(buf, sizeof(buf), "  %d %9.4f\n", b.first_oos_year, b.mean);
      os << buf;
    }
  }
  return os.str();
}

}  // namespace dcw

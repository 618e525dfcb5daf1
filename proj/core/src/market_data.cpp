#include "dcw/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dcw/errors.hpp"
#include "dcw/io_util.hpp"

namespace dcw {
namespace {

double median_of(std::vector<double> v) {
  size_t n = v.size();
  auto mid = v.begin() + n / 2;
  std::nth_element(v.begin(), mid, v.end());
  double hi = *mid;
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

// One outlier sweep; returns the surviving ticks. Window is centered on the
// candidate and clipped at the stream ends.
std::vector<Tick> mad_sweep(const std::vector<Tick>& ticks, const CleanConfig& cfg,
                            long* removed) {
  const long n = static_cast<long>(ticks.size());
  const long w = std::max(2, cfg.mad_window);
  if (n <= 2) return ticks;
  std::vector<Tick> keep;
  keep.reserve(ticks.size());
  std::vector<double> window, dev;
  for (long i = 0; i < n; ++i) {
    long lo = std::max<long>(0, i - w / 2);
    long hi = std::min<long>(n, lo + w);
    lo = std::max<long>(0, hi - w);
    window.clear();
    for (long j = lo; j < hi; ++j) window.push_back(ticks[j].price);
    double med = median_of(window);
    dev.clear();
    for (double p : window) dev.push_back(std::abs(p - med));
    double mad = median_of(dev);
    double floor = 1e-4 * std::abs(med);
    if (std::abs(ticks[i].price - med) > cfg.mad_k * std::max(mad, floor)) {
      ++*removed;
    } else {
      keep.push_back(ticks[i]);
    }
  }
  return keep;
}

}  // namespace

std::int64_t parse_time_of_day(std::string_view text) {
  auto bad = [&] { throw ParseError("expected HH:MM or HH:MM:SS", 0); };
  if (text.size() != 5 && text.size() != 8) bad();
  if (text[2] != ':' || (text.size() == 8 && text[5] != ':')) bad();
  auto two = [&](size_t pos) {
    if (text[pos] < '0' || text[pos] > '9' || text[pos + 1] < '0' || text[pos + 1] > '9')
      bad();
    return (text[pos] - '0') * 10 + (text[pos + 1] - '0');
  };
  int h = two(0), m = two(3), s = text.size() == 8 ? two(6) : 0;
  if (h > 23 || m > 59 || s > 59) bad();
  return ((h * 3600LL + m * 60 + s)) * kNsPerSec;
}

TickPanel load_ticks(const std::string& path, const SessionConfig& session) {
  auto lines = read_lines(path);
  if (lines.empty()) throw DataError("tick file is empty: " + path);
  if (split_csv(lines[0]) != std::vector<std::string>{"timestamp", "ticker", "price"})
    throw ParseError("expected header 'timestamp,ticker,price'", 1);

  std::map<std::string, std::vector<Tick>> by_ticker;
  for (size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    long lineno = static_cast<long>(k + 1);
    auto fields = split_csv(lines[k]);
    if (fields.size() != 3) throw ParseError("expected 3 fields", lineno);
    LocalTimestamp ts;
    try {
      ts = parse_timestamp(fields[0]);
    } catch (const ParseError& e) {
      throw ParseError(std::string("bad timestamp: ") + e.what(), lineno);
    }
    if (fields[1].empty()) throw ParseError("empty ticker", lineno);
    double price = parse_double_field(fields[2], lineno);
    if (!(price > 0.0)) throw ParseError("non-positive price", lineno);
    std::int64_t tod = ts.local_time_of_day_ns();
    if (tod < session.start_ns || tod > session.end_ns) continue;
    by_ticker[fields[1]].push_back(Tick{ts.utc_ns, ts.offset_sec, price});
  }
  if (by_ticker.empty()) throw DataError("no in-session ticks in " + path);

  TickPanel panel;
  panel.reserve(by_ticker.size());
  for (auto& [ticker, ticks] : by_ticker) {
    std::stable_sort(ticks.begin(), ticks.end(),
                     [](const Tick& a, const Tick& b) { return a.utc_ns < b.utc_ns; });
    panel.push_back(TickSeries{ticker, std::move(ticks)});
  }
  return panel;
}

TickPanel clean_ticks(const TickPanel& panel, const CleanConfig& cfg,
                      CleanStats* stats) {
  CleanStats local;
  CleanStats& st = stats ? *stats : local;
  st = CleanStats{};

  TickPanel out;
  out.reserve(panel.size());
  for (const auto& series : panel) {
    std::vector<Tick> ticks;
    ticks.reserve(series.ticks.size());
    for (const Tick& t : series.ticks) {
      if (t.price > 0.0)
        ticks.push_back(t);
      else
        ++st.removed_nonpositive;
    }

    // Collapse duplicate timestamps to the median price before the outlier
    // pass, so each instant contributes a single observation.
    std::vector<Tick> dedup;
    dedup.reserve(ticks.size());
    for (size_t i = 0; i < ticks.size();) {
      size_t j = i;
      while (j < ticks.size() && ticks[j].utc_ns == ticks[i].utc_ns) ++j;
      if (j - i == 1) {
        dedup.push_back(ticks[i]);
      } else {
        std::vector<double> prices;
        for (size_t k = i; k < j; ++k) prices.push_back(ticks[k].price);
        Tick merged = ticks[i];
        merged.price = median_of(std::move(prices));
        dedup.push_back(merged);
        st.collapsed_duplicates += static_cast<long>(j - i - 1);
      }
      i = j;
    }

    // Iterate the outlier sweep to a fixed point; this is what makes
    // clean_ticks(clean_ticks(x)) == clean_ticks(x).
    std::vector<Tick> kept = std::move(dedup);
    while (true) {
      long removed = 0;
      kept = mad_sweep(kept, cfg, &removed);
      st.removed_outliers += removed;
      if (removed == 0) break;
    }

    if (kept.empty() && !series.ticks.empty()) ++st.emptied_streams;
    out.push_back(TickSeries{series.ticker, std::move(kept)});
  }
  return out;
}

std::vector<DayStreams> group_by_day(const TickPanel& panel) {
  std::map<Date, std::vector<TickSeries>> days;
  for (const auto& series : panel) {
    std::map<Date, std::vector<Tick>> per_day;
    for (const Tick& t : series.ticks) {
      LocalTimestamp ts{t.utc_ns, t.offset_sec};
      per_day[ts.local_date()].push_back(t);
    }
    for (auto& [date, ticks] : per_day)
      days[date].push_back(TickSeries{series.ticker, std::move(ticks)});
  }
  std::vector<DayStreams> out;
  out.reserve(days.size());
  for (auto& [date, streams] : days) out.push_back(DayStreams{date, std::move(streams)});
  return out;
}

SyncedPrices refresh_time_sync(const DayStreams& day) {
  const size_t m = day.streams.size();
  if (m == 0) throw DataError("refresh-time sync needs at least one stream");
  for (const auto& s : day.streams)
    if (s.ticks.size() < 2)
      throw DataError("asset " + s.ticker + " has fewer than 2 ticks on " +
                      day.date.to_string());

  std::vector<size_t> next(m, 0);  // first tick index not yet consumed
  std::vector<double> last_price(m, 0.0);
  std::vector<TimestampNs> times;
  std::vector<Eigen::VectorXd> rows;

  while (true) {
    // Candidate sync instant: latest of the first unconsumed tick times.
    TimestampNs tau = 0;
    bool ok = true;
    for (size_t i = 0; i < m; ++i) {
      if (next[i] >= day.streams[i].ticks.size()) {
        ok = false;
        break;
      }
      tau = std::max(tau, day.streams[i].ticks[next[i]].utc_ns);
    }
    if (!ok) break;
    // Every asset's price at tau is its last trade at or before tau.
    Eigen::VectorXd row(static_cast<Eigen::Index>(m));
    for (size_t i = 0; i < m; ++i) {
      const auto& ticks = day.streams[i].ticks;
      while (next[i] < ticks.size() && ticks[next[i]].utc_ns <= tau) {
        last_price[i] = ticks[next[i]].price;
        ++next[i];
      }
      row(static_cast<Eigen::Index>(i)) = last_price[i];
    }
    times.push_back(tau);
    rows.push_back(std::move(row));
  }

  if (times.size() < 2)
    throw DataError("fewer than two sync points on " + day.date.to_string());

  SyncedPrices out;
  out.date = day.date;
  for (const auto& s : day.streams) out.tickers.push_back(s.ticker);
  out.times = std::move(times);
  out.prices.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
  for (size_t j = 0; j < rows.size(); ++j) out.prices.row(static_cast<Eigen::Index>(j)) = rows[j];
  return out;
}

ReturnPanel intraday_returns(const SyncedPrices& prices) {
  const Eigen::Index rows = prices.prices.rows();
  if (rows < 2) throw DataError("need at least two synchronized prices");
  if ((prices.prices.array() <= 0.0).any())
    throw DataError("non-positive price in synchronized grid");
  ReturnPanel panel;
  panel.date = prices.date;
  panel.tickers = prices.tickers;
  panel.r = prices.prices.bottomRows(rows - 1).array().log().matrix() -
            prices.prices.topRows(rows - 1).array().log().matrix();
  return panel;
}

ReturnPanel bin_returns(const DayStreams& day, const SessionConfig& session,
                        int bin_minutes) {
  if (bin_minutes <= 0) throw ConfigError("bin width must be positive");
  const std::int64_t width = bin_minutes * 60LL * kNsPerSec;
  const std::int64_t span = session.end_ns - session.start_ns;
  if (span <= 0) throw ConfigError("empty trading session");
  const Eigen::Index bins = static_cast<Eigen::Index>((span + width - 1) / width);
  const Eigen::Index m = static_cast<Eigen::Index>(day.streams.size());

  ReturnPanel panel;
  panel.date = day.date;
  panel.r = Eigen::MatrixXd::Zero(bins, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& series = day.streams[static_cast<size_t>(i)];
    panel.tickers.push_back(series.ticker);
    if (series.ticks.empty()) continue;
    double prev = series.ticks.front().price;
    size_t k = 0;
    for (Eigen::Index b = 0; b < bins; ++b) {
      std::int64_t end = session.start_ns + (b + 1) * width;
      double last = 0.0;
      bool traded = false;
      while (k < series.ticks.size()) {
        LocalTimestamp ts{series.ticks[k].utc_ns, series.ticks[k].offset_sec};
        if (ts.local_time_of_day_ns() >= end && b + 1 < bins) break;
        last = series.ticks[k].price;
        traded = true;
        ++k;
      }
      if (traded && prev > 0.0 && last > 0.0) {
        panel.r(b, i) = std::log(last) - std::log(prev);
        prev = last;
      }
    }
  }
  return panel;
}

DailyBarPanel load_daily_bars(const std::string& path) {
  auto lines = read_lines(path);
  if (lines.empty()) throw DataError("bar file is empty: " + path);
  if (split_csv(lines[0]) !=
      std::vector<std::string>{"date", "ticker", "open", "close"})
    throw ParseError("expected header 'date,ticker,open,close'", 1);

  struct Bar {
    double open, close;
  };
  std::map<Date, std::map<std::string, Bar>> table;
  for (size_t k = 1; k < lines.size(); ++k) {
    if (lines[k].empty()) continue;
    long lineno = static_cast<long>(k + 1);
    auto fields = split_csv(lines[k]);
    if (fields.size() != 4) throw ParseError("expected 4 fields", lineno);
    Date date;
    try {
      date = Date::parse(fields[0]);
    } catch (const ParseError& e) {
      throw ParseError(std::string("bad date: ") + e.what(), lineno);
    }
    double open = parse_double_field(fields[2], lineno);
    double close = parse_double_field(fields[3], lineno);
    if (!(open > 0.0) || !(close > 0.0))
      throw ParseError("non-positive bar price", lineno);
    auto [it, inserted] = table[date].emplace(fields[1], Bar{open, close});
    if (!inserted)
      throw ParseError("duplicate bar for " + fields[1] + " on " + fields[0], lineno);
  }
  if (table.empty()) throw DataError("no bars in " + path);

  // Column space = union of tickers; every date must cover all of them.
  std::vector<std::string> tickers;
  for (const auto& [date, row] : table)
    for (const auto& [ticker, bar] : row)
      if (std::find(tickers.begin(), tickers.end(), ticker) == tickers.end())
        tickers.push_back(ticker);
  std::sort(tickers.begin(), tickers.end());

  DailyBarPanel panel;
  panel.tickers = tickers;
  panel.open.resize(static_cast<Eigen::Index>(table.size()),
                    static_cast<Eigen::Index>(tickers.size()));
  panel.close.resizeLike(panel.open);
  Eigen::Index t = 0;
  for (const auto& [date, row] : table) {
    panel.dates.push_back(date);
    for (size_t i = 0; i < tickers.size(); ++i) {
      auto it = row.find(tickers[i]);
      if (it == row.end())
        throw DataError("missing bar for " + tickers[i] + " on " + date.to_string());
      panel.open(t, static_cast<Eigen::Index>(i)) = it->second.open;
      panel.close(t, static_cast<Eigen::Index>(i)) = it->second.close;
    }
    ++t;
  }
  return panel;
}

const std::string& AssetMeta::sector_of(const std::string& ticker) const {
  for (size_t i = 0; i < tickers.size(); ++i)
    if (tickers[i] == ticker) return sectors[i];
  throw DataError("no sector assignment for ticker " + ticker);
}

}  // namespace dcw

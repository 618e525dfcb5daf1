#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dcw/dates.hpp"

namespace dcw {

/// One trade observation. The local-time offset from the source row is kept
/// so session filtering and day bucketing happen in exchange-local time.
struct Tick {
  TimestampNs utc_ns = 0;
  std::int32_t offset_sec = 0;
  double price = 0.0;

  TimestampNs local_ns() const { return utc_ns + offset_sec * kNsPerSec; }
};

/// All ticks of one ticker, sorted by timestamp.
struct TickSeries {
  std::string ticker;
  std::vector<Tick> ticks;
};

/// Per-ticker tick streams, sorted by ticker.
using TickPanel = std::vector<TickSeries>;

/// Trading-session window in local time of day, closed on both ends.
struct SessionConfig {
  std::int64_t start_ns = 9 * 3600LL * kNsPerSec + 30 * 60LL * kNsPerSec;
  std::int64_t end_ns = 16 * 3600LL * kNsPerSec;
};

/// Parses "HH:MM" or "HH:MM:SS" into nanoseconds since local midnight.
std::int64_t parse_time_of_day(std::string_view text);

struct CleanConfig {
  double mad_k = 10.0;   // outlier threshold in median absolute deviations
  int mad_window = 50;   // rolling window length for the robust statistics
  SessionConfig session;
};

struct CleanStats {
  long removed_nonpositive = 0;
  long removed_outliers = 0;
  long collapsed_duplicates = 0;  // ticks absorbed into a same-timestamp median
  long emptied_streams = 0;       // warning count: streams left without ticks
};

/// Loads `timestamp,ticker,price` CSV (header required, ISO-8601 timestamps
/// with numeric offset). Rows outside the session window are dropped. Output
/// is grouped per ticker and sorted by timestamp. Throws ParseError with the
/// offending line number on malformed rows (including non-positive prices)
/// and DataError when the file yields no records.
TickPanel load_ticks(const std::string& path, const SessionConfig& session);

/// Cleans per-ticker streams: drops non-positive prices, collapses duplicate
/// timestamps to their median price, then removes outliers farther than
/// mad_k median-absolute-deviations from a rolling-window median. The
/// outlier pass repeats until no tick is flagged, which makes the whole
/// operation idempotent. Window medians use a deviation floor of one basis
/// point of the local median so constant-price windows do not flag ordinary
/// tick-size moves.
TickPanel clean_ticks(const TickPanel& panel, const CleanConfig& cfg,
                      CleanStats* stats = nullptr);

/// One trading day's streams for the assets under synchronization.
struct DayStreams {
  Date date;
  std::vector<TickSeries> streams;  // same order as the panel's tickers
};

/// Buckets a panel into per-day stream groups by local calendar date.
/// Tickers with no ticks on a date are simply absent from that group.
std::vector<DayStreams> group_by_day(const TickPanel& panel);

/// Refresh-time synchronized prices for one day: row j holds every asset's
/// most recent trade price at sync instant j.
struct SyncedPrices {
  Date date;
  std::vector<std::string> tickers;
  std::vector<TimestampNs> times;  // strictly increasing, size J+1
  Eigen::MatrixXd prices;          // (J+1) x M
};

/// Builds the refresh-time grid: sync point j is the first instant at which
/// every asset has traded at least once since point j-1. Requires >= 2 ticks
/// per asset and >= 2 resulting sync points. Throws DataError naming the
/// offending asset otherwise.
SyncedPrices refresh_time_sync(const DayStreams& day);

/// Log-returns between consecutive rows of a price grid.
struct ReturnPanel {
  Date date;
  std::vector<std::string> tickers;
  Eigen::MatrixXd r;  // J x M
};

ReturnPanel intraday_returns(const SyncedPrices& prices);

/// Calendar-time binned log-returns per asset (independent of the refresh
/// grid). A bin's return runs from the last trade at or before the bin start
/// (the day's first trade when there is none) to the last trade inside the
/// bin; bins without trades contribute zero.
ReturnPanel bin_returns(const DayStreams& day, const SessionConfig& session,
                        int bin_minutes = 15);

/// Daily open/close bars for the exact-turnover adjustment. Open-to-close
/// returns are plain fractions (0.01 = 1%).
struct DailyBarPanel {
  std::vector<Date> dates;
  std::vector<std::string> tickers;
  Eigen::MatrixXd open;   // T x M
  Eigen::MatrixXd close;  // T x M

  double oc_return(Eigen::Index t, Eigen::Index i) const {
    return close(t, i) / open(t, i) - 1.0;
  }
};

/// Loads `date,ticker,open,close` CSV (header required). Every (date,
/// ticker) pair must appear exactly once; prices must be positive.
DailyBarPanel load_daily_bars(const std::string& path);

/// Ticker -> sector assignment used by the sector-importance report.
struct AssetMeta {
  std::vector<std::string> tickers;
  std::vector<std::string> sectors;  // aligned with tickers

  const std::string& sector_of(const std::string& ticker) const;
};

}  // namespace dcw

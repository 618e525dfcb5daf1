#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dcw/errors.hpp"
#include "dcw/market_data.hpp"
#include "test_util.hpp"

using namespace dcw;
using dcw_test::hms;
using dcw_test::tick_at;

namespace {

const Date kDay = Date::parse("2010-01-04");

TickSeries make_series(const std::string& ticker,
                       const std::vector<std::pair<std::int64_t, double>>& rows) {
  TickSeries s;
  s.ticker = ticker;
  for (const auto& [tod, price] : rows) s.ticks.push_back(tick_at(kDay, tod, price));
  return s;
}

}  // namespace

TEST_CASE("load_ticks enforces header, session and row syntax") {
  std::string dir = dcw_test::temp_dir("load_ticks");
  SessionConfig session;

  std::string good =
      "timestamp,ticker,price\n"
      "2010-01-04T10:00:00-05:00,BBB,50\n"
      "2010-01-04T09:30:00-05:00,AAA,100\n"
      "2010-01-04T16:00:00-05:00,AAA,101\n"
      "2010-01-04T16:00:00.000000001-05:00,AAA,999\n"
      "2010-01-04T09:29:59-05:00,AAA,999\n";
  TickPanel panel = load_ticks(dcw_test::write_text(dir, "good.csv", good), session);
  REQUIRE(panel.size() == 2);
  CHECK(panel[0].ticker == "AAA");
  REQUIRE(panel[0].ticks.size() == 2);  // session is closed; outside rows dropped
  CHECK(panel[0].ticks[0].price == 100);
  CHECK(panel[0].ticks[1].price == 101);
  CHECK(panel[1].ticker == "BBB");

  CHECK_THROWS_AS(
      load_ticks(dcw_test::write_text(dir, "hdr.csv", "time,ticker,price\n"), session),
      ParseError);
  CHECK_THROWS_AS(
      load_ticks(dcw_test::write_text(
                     dir, "price.csv",
                     "timestamp,ticker,price\n2010-01-04T10:00:00-05:00,AAA,-1\n"),
                 session),
      ParseError);
  CHECK_THROWS_AS(
      load_ticks(dcw_test::write_text(
                     dir, "empty.csv",
                     "timestamp,ticker,price\n2010-01-04T03:00:00-05:00,AAA,5\n"),
                 session),
      DataError);
  try {
    load_ticks(dcw_test::write_text(
                   dir, "badrow.csv",
                   "timestamp,ticker,price\n2010-01-04T10:00:00-05:00,AAA,1\n"
                   "2010-01-04T10:00:01-05:00,AAA,oops\n"),
               session);
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("clean_ticks drops non-positive prices and collapses duplicates") {
  TickPanel panel{make_series("AAA", {{hms(10, 0), 100.0},
                                      {hms(10, 1), -3.0},
                                      {hms(10, 2), 101.0},
                                      {hms(10, 2), 103.0},
                                      {hms(10, 2), 102.0},
                                      {hms(10, 3), 101.5}})};
  CleanConfig cfg;
  CleanStats stats;
  TickPanel out = clean_ticks(panel, cfg, &stats);
  REQUIRE(out.size() == 1);
  REQUIRE(out[0].ticks.size() == 3);
  CHECK(stats.removed_nonpositive == 1);
  CHECK(stats.collapsed_duplicates == 2);
  CHECK(out[0].ticks[1].local_ns() % kNsPerDay == hms(10, 2));
  CHECK(out[0].ticks[1].price == 102.0);  // median of {101, 103, 102}
}

TEST_CASE("clean_ticks removes spikes but keeps tick-size moves") {
  std::vector<std::pair<std::int64_t, double>> rows;
  for (int i = 0; i < 80; ++i)
    rows.push_back({hms(10, 0) + i * kNsPerSec, 100.0 + 0.01 * (i % 2)});
  rows[40].second = 1000.0;  // isolated 10x spike
  TickPanel panel{make_series("AAA", rows)};
  CleanConfig cfg;
  CleanStats stats;
  TickPanel out = clean_ticks(panel, cfg, &stats);
  CHECK(stats.removed_outliers == 1);
  REQUIRE(out[0].ticks.size() == 79);
  for (const Tick& t : out[0].ticks) CHECK(t.price < 101.0);
}

TEST_CASE("clean_ticks is idempotent on noisy data") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::pair<std::int64_t, double>> rows;
  double lp = std::log(100.0);
  for (int i = 0; i < 500; ++i) {
    lp += 0.001 * normal(rng);
    double price = std::exp(lp);
    if (i % 97 == 0) price *= 5.0;  // sprinkle of spikes
    rows.push_back({hms(9, 30) + i * 20 * kNsPerSec, price});
  }
  TickPanel panel{make_series("AAA", rows)};
  CleanConfig cfg;
  TickPanel once = clean_ticks(panel, cfg);
  TickPanel twice = clean_ticks(once, cfg);
  REQUIRE(once[0].ticks.size() == twice[0].ticks.size());
  for (size_t i = 0; i < once[0].ticks.size(); ++i) {
    CHECK(once[0].ticks[i].utc_ns == twice[0].ticks[i].utc_ns);
    CHECK(once[0].ticks[i].price == twice[0].ticks[i].price);
  }
}

TEST_CASE("refresh_time_sync reproduces the hand-worked grid") {
  DayStreams day;
  day.date = kDay;
  day.streams.push_back(make_series("A", {{hms(10, 0, 1), 10.0},
                                          {hms(10, 0, 2), 11.0},
                                          {hms(10, 0, 3), 12.0}}));
  day.streams.push_back(
      make_series("B", {{hms(10, 0, 2), 20.0}, {hms(10, 0, 4), 21.0}}));
  SyncedPrices sync = refresh_time_sync(day);
  REQUIRE(sync.times.size() == 2);
  // Refresh times are UTC instants; these streams sit at UTC-5.
  CHECK(sync.times[0] % kNsPerDay == hms(15, 0, 2));
  CHECK(sync.times[1] % kNsPerDay == hms(15, 0, 4));
  CHECK(sync.prices(0, 0) == 11.0);
  CHECK(sync.prices(0, 1) == 20.0);
  CHECK(sync.prices(1, 0) == 12.0);  // carried forward from 10:00:03
  CHECK(sync.prices(1, 1) == 21.0);

  DayStreams thin = day;
  thin.streams[1].ticks.resize(1);
  CHECK_THROWS_WITH_AS(refresh_time_sync(thin),
                       doctest::Contains("B"), DataError);
}

TEST_CASE("intraday returns are log price differences") {
  DayStreams day;
  day.date = kDay;
  day.streams.push_back(make_series(
      "A", {{hms(10, 0), 100.0}, {hms(10, 1), 101.0}, {hms(10, 2), 99.0}}));
  day.streams.push_back(make_series(
      "B", {{hms(10, 0), 50.0}, {hms(10, 1), 50.5}, {hms(10, 2), 50.0}}));
  ReturnPanel r = intraday_returns(refresh_time_sync(day));
  REQUIRE(r.r.rows() == 2);
  CHECK(r.r(0, 0) == doctest::Approx(std::log(101.0 / 100.0)).epsilon(1e-12));
  CHECK(r.r(1, 1) == doctest::Approx(std::log(50.0 / 50.5)).epsilon(1e-12));
}

TEST_CASE("bin_returns uses calendar bins with zero-fill") {
  DayStreams day;
  day.date = kDay;
  day.streams.push_back(make_series("A", {{hms(9, 30), 100.0},
                                          {hms(9, 37), 101.0},
                                          {hms(9, 52), 102.0},
                                          {hms(16, 0), 103.0}}));
  SessionConfig session;
  ReturnPanel r = bin_returns(day, session, 15);
  REQUIRE(r.r.rows() == 26);  // 390 minutes / 15
  CHECK(r.r(0, 0) == doctest::Approx(std::log(101.0 / 100.0)).epsilon(1e-12));
  CHECK(r.r(1, 0) == doctest::Approx(std::log(102.0 / 101.0)).epsilon(1e-12));
  for (int b = 2; b < 25; ++b) CHECK(r.r(b, 0) == 0.0);
  // the session-end print belongs to the final bin
  CHECK(r.r(25, 0) == doctest::Approx(std::log(103.0 / 102.0)).epsilon(1e-12));
}

TEST_CASE("group_by_day splits on the local calendar date") {
  TickSeries s = make_series("A", {{hms(10, 0), 1.0}, {hms(11, 0), 2.0}});
  s.ticks.push_back(tick_at(kDay + 1, hms(10, 0), 3.0));
  std::vector<DayStreams> days = group_by_day({s});
  REQUIRE(days.size() == 2);
  CHECK(days[0].date == kDay);
  CHECK(days[0].streams[0].ticks.size() == 2);
  CHECK(days[1].date == kDay + 1);
  CHECK(days[1].streams[0].ticks.size() == 1);
}

TEST_CASE("daily bars load on a complete grid") {
  std::string dir = dcw_test::temp_dir("bars");
  std::string good =
      "date,ticker,open,close\n"
      "2010-01-04,AAA,100,101\n"
      "2010-01-04,BBB,50,49.5\n"
      "2010-01-05,BBB,49.5,50\n"
      "2010-01-05,AAA,101,102\n";
  DailyBarPanel bars = load_daily_bars(dcw_test::write_text(dir, "b.csv", good));
  REQUIRE(bars.dates.size() == 2);
  REQUIRE(bars.tickers.size() == 2);
  CHECK(bars.tickers[0] == "AAA");
  CHECK(bars.oc_return(0, 0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(bars.oc_return(0, 1) == doctest::Approx(-0.01).epsilon(1e-12));

  CHECK_THROWS_AS(load_daily_bars(dcw_test::write_text(
                      dir, "gap.csv",
                      "date,ticker,open,close\n2010-01-04,AAA,100,101\n"
                      "2010-01-04,BBB,50,49.5\n2010-01-05,AAA,101,102\n")),
                  DataError);
  CHECK_THROWS_AS(load_daily_bars(dcw_test::write_text(
                      dir, "dup.csv",
                      "date,ticker,open,close\n2010-01-04,AAA,100,101\n"
                      "2010-01-04,AAA,100,101\n")),
                  DataError);
  CHECK_THROWS_AS(load_daily_bars(dcw_test::write_text(
                      dir, "neg.csv",
                      "date,ticker,open,close\n2010-01-04,AAA,0,101\n")),
                  ParseError);
}

TEST_CASE("asset metadata flags unknown tickers") {
  AssetMeta meta;
  meta.tickers = {"AAA", "BBB"};
  meta.sectors = {"Tech", "Energy"};
  CHECK(meta.sector_of("BBB") == "Energy");
  CHECK_THROWS_AS(meta.sector_of("ZZZ"), DataError);
}

#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dcw/backtest.hpp"
#include "dcw/errors.hpp"
#include "dcw/evaluation.hpp"
#include "dcw/persist.hpp"
#include "dcw/realized.hpp"
#include "dcw/synthetic.hpp"
#include "test_util.hpp"

using namespace dcw;
using dcw_test::temp_dir;
using dcw_test::write_text;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Relative path -> bytes for every regular file under root.
std::map<std::string, std::string> snapshot_dir(const std::string& root) {
  std::map<std::string, std::string> snap;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    auto rel = std::filesystem::relative(entry.path(), root);
    snap[rel.string()] = read_file(entry.path().string());
  }
  return snap;
}

const StrategyPath* find_path(const BacktestReport& rep, Strategy s, double ec) {
  for (const StrategyPath& p : rep.paths)
    if (p.strategy == s && ((std::isinf(ec) && std::isinf(p.ec)) || p.ec == ec))
      return &p;
  return nullptr;
}

// Three assets over three calendar years, enough for two rolling windows
// with one estimation year each. Built once and shared across cases.
struct BacktestFixture {
  std::string root;
  SyntheticFiles files;
  std::vector<std::string> tickers{"SYN00", "SYN01", "SYN02"};
  BacktestConfig cfg;
  BacktestReport rep;
  std::map<std::string, std::string> out_snapshot;
};

const BacktestFixture& fixture() {
  static const BacktestFixture fx = [] {
    BacktestFixture f;
    f.root = temp_dir("backtest_fixture");
    SyntheticSpec spec;
    spec.assets = 3;
    spec.days = 780;  // 2008 (262 business days), 2009 (261), part of 2010
    spec.intraday_points = 26;
    spec.var_mean = {0.8, 1.5, 2.5};
    spec.noise_scale = 5e-4;
    spec.seed = 9;
    f.files = generate_synthetic(spec, f.root + "/data");

    f.cfg.ticks_path = f.files.ticks;
    f.cfg.bars_path = f.files.bars;
    f.cfg.tickers = f.tickers;
    f.cfg.sectors = {"Alpha", "Beta", "Alpha"};
    f.cfg.is_years = 1;
    f.cfg.oos_years = 1;
    f.cfg.strategies = {Strategy::Naive, Strategy::VT, Strategy::RW,
                        Strategy::DCC, Strategy::DCW};
    f.cfg.ec_grid = {1.0, 1.5, std::numeric_limits<double>::infinity()};
    f.cfg.eval.tau_pct = 0.01;  // tau_bp = 1
    f.cfg.out_dir = f.root + "/run1";

    f.rep = run_backtest(f.cfg);
    f.out_snapshot = snapshot_dir(f.cfg.out_dir);
    return f;
  }();
  return fx;
}

std::string write_config(const std::string& dir, const std::string& body) {
  return write_text(dir, "config.json", body);
}

std::string report_bytes(const BacktestReport& rep, const std::string& path) {
  save_report(rep, path);
  return read_file(path);
}

}  // namespace

TEST_CASE("config loading validates keys and values") {
  auto dir = temp_dir("backtest_config");

  SUBCASE("minimal config gets the documented defaults") {
    auto p = write_config(dir, R"({"tickers": ["AA", "BB"]})");
    BacktestConfig cfg = load_backtest_config(p);
    CHECK(cfg.tickers == std::vector<std::string>{"AA", "BB"});
    REQUIRE(cfg.strategies.size() == 5);
    CHECK(cfg.strategies.front() == Strategy::Naive);
    CHECK(cfg.strategies.back() == Strategy::DCW);
    REQUIRE(cfg.ec_grid.size() == 2);
    CHECK(cfg.ec_grid[0] == 1.0);
    CHECK(std::isinf(cfg.ec_grid[1]));
    CHECK(cfg.is_years == 5);
    CHECK(cfg.oos_years == 1);
    CHECK(cfg.eval.gamma == 1.0);
    CHECK(cfg.eval.tau_pct == 0.0);
    CHECK(cfg.dcw_raw_feedback);
    CHECK(cfg.sectors.empty());
  }

  SUBCASE("full config maps every key") {
    auto p = write_config(dir, R"({
      "ticks": "t.csv", "bars": "b.csv", "covariances": "c.csv",
      "tickers": ["AA", "BB"], "sectors": {"AA": "Tech", "BB": "Energy"},
      "is_years": 2, "oos_years": 1,
      "strategies": ["RW", "DCW"], "ec_grid": [1, 1.5, "inf"],
      "gamma": 2.5, "tau_bp": 5, "mad_k": 8, "mad_window": 40,
      "session_start": "10:00", "session_end": "15:30",
      "bin_minutes": 5, "return_scale": 1,
      "dcw_feedback": "normalized",
      "solver": {"feas_tol": 1e-8, "kkt_tol": 1e-7, "max_iter": 99,
                 "tie_break": 1e-9},
      "seed": 7, "threads": 2, "out_dir": "elsewhere"
    })");
    BacktestConfig cfg = load_backtest_config(p);
    CHECK(cfg.ticks_path == "t.csv");
    CHECK(cfg.covariances_path == "c.csv");
    CHECK(cfg.sectors == std::vector<std::string>{"Tech", "Energy"});
    CHECK(cfg.strategies ==
          std::vector<Strategy>{Strategy::RW, Strategy::DCW});
    REQUIRE(cfg.ec_grid.size() == 3);
    CHECK(cfg.ec_grid[1] == 1.5);
    CHECK(std::isinf(cfg.ec_grid[2]));
    CHECK(cfg.eval.gamma == 2.5);
    CHECK(cfg.eval.tau_pct == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(cfg.clean.mad_k == 8.0);
    CHECK(cfg.clean.mad_window == 40);
    CHECK(cfg.clean.session.start_ns == 10LL * 3600 * kNsPerSec);
    CHECK(cfg.clean.session.end_ns == (15LL * 3600 + 30 * 60) * kNsPerSec);
    CHECK(cfg.bin_minutes == 5);
    CHECK(cfg.return_scale == 1.0);
    CHECK_FALSE(cfg.dcw_raw_feedback);
    CHECK(cfg.solver.max_iter == 99);
    CHECK(cfg.seed == 7);
    CHECK(cfg.threads == 2);
    CHECK(cfg.out_dir == "elsewhere");
  }

  SUBCASE("rejects unknown and malformed input") {
    CHECK_THROWS_AS(load_backtest_config(dir + "/missing.json"), DataError);
    CHECK_THROWS_AS(
        load_backtest_config(write_config(dir, "not json at all")),
        ConfigError);
    CHECK_THROWS_AS(
        load_backtest_config(write_config(dir, R"(["array root"])")),
        ConfigError);
    CHECK_THROWS_AS(load_backtest_config(write_config(
                        dir, R"({"tickers": ["A"], "frobnicate": 1})")),
                    ConfigError);
    CHECK_THROWS_AS(
        load_backtest_config(write_config(
            dir, R"({"tickers": ["A"], "solver": {"wobble": 1}})")),
        ConfigError);
    CHECK_THROWS_AS(
        load_backtest_config(write_config(
            dir, R"({"tickers": ["A"], "dcw_feedback": "sideways"})")),
        ConfigError);
    CHECK_THROWS_AS(load_backtest_config(write_config(
                        dir, R"({"tickers": ["A"], "is_years": "two"})")),
                    ConfigError);
  }

  SUBCASE("rejects inconsistent field values") {
    CHECK_THROWS_AS(
        load_backtest_config(write_config(dir, R"({"tickers": []})")),
        ConfigError);
    CHECK_THROWS_AS(
        load_backtest_config(write_config(dir, R"({"tickers": ["A", "A"]})")),
        ConfigError);
    CHECK_THROWS_AS(load_backtest_config(write_config(
                        dir, R"({"tickers": ["A"], "ec_grid": []})")),
                    ConfigError);
    CHECK_THROWS_AS(load_backtest_config(write_config(
                        dir, R"({"tickers": ["A"], "ec_grid": [0.5]})")),
                    ConfigError);
    CHECK_THROWS_AS(load_backtest_config(write_config(
                        dir, R"({"tickers": ["A"], "ec_grid": [2, 1.5]})")),
                    ConfigError);
    CHECK_THROWS_AS(load_backtest_config(write_config(
                        dir, R"({"tickers": ["A"], "strategies": []})")),
                    ConfigError);
    CHECK_THROWS_AS(
        load_backtest_config(write_config(
            dir, R"({"tickers": ["A"], "strategies": ["RW", "RW"]})")),
        ConfigError);
    CHECK_THROWS_AS(
        load_backtest_config(write_config(
            dir, R"({"tickers": ["A"], "strategies": ["Momentum"]})")),
        ConfigError);
    CHECK_THROWS_AS(
        load_backtest_config(write_config(
            dir, R"({"tickers": ["A", "B"], "sectors": {"A": "Tech"}})")),
        ConfigError);
    CHECK_THROWS_AS(
        load_backtest_config(write_config(
            dir,
            R"({"tickers": ["A"], "sectors": {"A": "Tech", "Z": "Oil"}})")),
        ConfigError);
    CHECK_THROWS_AS(load_backtest_config(write_config(
                        dir, R"({"tickers": ["A"], "gamma": 0})")),
                    ConfigError);
    CHECK_THROWS_AS(load_backtest_config(write_config(
                        dir, R"({"tickers": ["A"], "tau_bp": -1})")),
                    ConfigError);
    CHECK_THROWS_AS(
        load_backtest_config(write_config(
            dir,
            R"({"tickers": ["A"], "session_start": "16:00", "session_end": "09:30"})")),
        ConfigError);
  }
}

TEST_CASE("config digest separates every field") {
  BacktestConfig base;
  base.tickers = {"AA", "BB"};
  base.ticks_path = "ticks.csv";
  base.bars_path = "bars.csv";

  std::vector<BacktestConfig> variants;
  auto vary = [&](auto&& mutate) {
    BacktestConfig c = base;
    mutate(c);
    variants.push_back(c);
  };
  vary([](BacktestConfig& c) { c.ticks_path = "other.csv"; });
  vary([](BacktestConfig& c) { c.bars_path = "other_bars.csv"; });
  vary([](BacktestConfig& c) { c.covariances_path = "cov.csv"; });
  vary([](BacktestConfig& c) { c.tickers.push_back("CC"); });
  vary([](BacktestConfig& c) { c.sectors = {"Tech", "Energy"}; });
  vary([](BacktestConfig& c) { c.is_years = 4; });
  vary([](BacktestConfig& c) { c.oos_years = 2; });
  vary([](BacktestConfig& c) { c.strategies = {Strategy::RW}; });
  vary([](BacktestConfig& c) { c.ec_grid = {1.0, 2.0}; });
  vary([](BacktestConfig& c) { c.eval.gamma = 3.0; });
  vary([](BacktestConfig& c) { c.eval.tau_pct = 0.02; });
  vary([](BacktestConfig& c) { c.clean.mad_k = 9.0; });
  vary([](BacktestConfig& c) { c.clean.mad_window = 60; });
  vary([](BacktestConfig& c) { c.clean.session.end_ns -= kNsPerSec; });
  vary([](BacktestConfig& c) { c.bin_minutes = 5; });
  vary([](BacktestConfig& c) { c.return_scale = 1.0; });
  vary([](BacktestConfig& c) { c.dcw_raw_feedback = false; });
  vary([](BacktestConfig& c) { c.solver.max_iter = 123; });
  vary([](BacktestConfig& c) { c.solver.tie_break = 1e-9; });
  vary([](BacktestConfig& c) { c.seed = 99; });
  vary([](BacktestConfig& c) { c.threads = 4; });
  vary([](BacktestConfig& c) { c.out_dir = "elsewhere"; });

  std::set<std::string> digests{config_digest(base)};
  for (const BacktestConfig& c : variants) digests.insert(config_digest(c));
  CHECK(digests.size() == variants.size() + 1);
  CHECK(config_digest(base) == config_digest(base));
}

TEST_CASE("synthetic generation is deterministic and self-consistent") {
  SyntheticSpec spec;
  spec.assets = 2;
  spec.days = 25;
  spec.intraday_points = 16;
  spec.var_mean = {1.0, 2.0};
  spec.noise_scale = 1e-4;
  spec.seed = 11;

  auto dir_a = temp_dir("synth_a");
  auto dir_b = temp_dir("synth_b");
  SyntheticFiles fa = generate_synthetic(spec, dir_a);
  SyntheticFiles fb = generate_synthetic(spec, dir_b);

  CHECK(read_file(fa.ticks) == read_file(fb.ticks));
  CHECK(read_file(fa.bars) == read_file(fb.bars));
  CHECK(read_file(fa.true_cov) == read_file(fb.true_cov));
  CHECK(read_file(fa.true_weights) == read_file(fb.true_weights));

  // A different seed must change the draw.
  spec.seed = 12;
  SyntheticFiles fc = generate_synthetic(spec, temp_dir("synth_c"));
  CHECK(read_file(fa.ticks) != read_file(fc.ticks));

  std::vector<std::string> tickers{"SYN00", "SYN01"};
  CovMatrixSeries truth = load_cov_series(fa.true_cov, &tickers);
  REQUIRE(truth.size() == 25);
  for (Eigen::Index t = 1; t < truth.size(); ++t) {
    CHECK(truth.entries[t].date.days() > truth.entries[t - 1].date.days());
    CHECK_FALSE(truth.entries[t].date.is_weekend());
  }
  for (const CovEntry& e : truth.entries) {
    CHECK(e.cov(0, 1) == e.cov(1, 0));
    CHECK(e.cov(0, 0) > 0.0);
    Eigen::LLT<Eigen::MatrixXd> llt(e.cov);
    CHECK(llt.info() == Eigen::Success);
  }

  WeightSeries tw = load_weight_series(fa.true_weights);
  REQUIRE(tw.w.rows() == 25);
  CHECK(tw.tickers == tickers);
  for (Eigen::Index t = 0; t < tw.w.rows(); ++t)
    CHECK(tw.w.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("noise-free ticks recover the true covariance closely") {
  SyntheticSpec spec;
  spec.assets = 2;
  spec.days = 6;
  spec.intraday_points = 30000;
  spec.var_mean = {1.0, 2.0};
  spec.noise_scale = 0.0;
  spec.seed = 3;
  auto dir = temp_dir("synth_clean");
  SyntheticFiles files = generate_synthetic(spec, dir);

  BacktestConfig cfg;
  cfg.ticks_path = files.ticks;
  cfg.tickers = {"SYN00", "SYN01"};

  CleanStats stats;
  CovMatrixSeries est = covariance_from_ticks(cfg, &stats);
  REQUIRE(est.size() == 6);
  CHECK(stats.removed_nonpositive == 0);
  CHECK(stats.emptied_streams == 0);

  CovMatrixSeries truth = load_cov_series(files.true_cov, &cfg.tickers);
  REQUIRE(truth.size() == est.size());
  double rel_sum = 0.0;
  for (Eigen::Index t = 0; t < est.size(); ++t) {
    CHECK(est.entries[t].date.days() == truth.entries[t].date.days());
    double rel = (est.entries[t].cov - truth.entries[t].cov).norm() /
                 truth.entries[t].cov.norm();
    rel_sum += rel;
  }
  CHECK(rel_sum / static_cast<double>(est.size()) <= 0.05);
}

TEST_CASE("backtest report has the expected shape") {
  const BacktestFixture& fx = fixture();
  const BacktestReport& rep = fx.rep;

  CHECK(rep.tickers == fx.tickers);
  REQUIRE(rep.years == std::vector<int>{2009, 2010});
  REQUIRE(rep.days_by_year == std::vector<long>{261, 257});

  // Naive and VT only at cap 1; grid strategies at every cap.
  REQUIRE(rep.paths.size() == 11);
  CHECK(find_path(rep, Strategy::Naive, 1.0));
  CHECK(find_path(rep, Strategy::VT, 1.0));
  CHECK_FALSE(find_path(rep, Strategy::Naive, 1.5));
  CHECK_FALSE(find_path(rep, Strategy::VT, 1.5));
  const double inf = std::numeric_limits<double>::infinity();
  for (Strategy s : {Strategy::RW, Strategy::DCC, Strategy::DCW})
    for (double ec : {1.0, 1.5, inf}) CHECK(find_path(rep, s, ec));

  for (const StrategyPath& p : rep.paths) {
    REQUIRE(p.pv_by_year.size() == 2);
    REQUIRE(p.to_by_year.size() == 2);
    CHECK(p.pv > 0.0);
    CHECK(p.to > 0.0);
    CHECK(p.to_exact > 0.0);
    // Headline numbers are the day-weighted aggregates of the yearly ones.
    CHECK(p.pv == doctest::Approx(weighted_mean(p.pv_by_year, rep.days_by_year))
                      .epsilon(1e-12));
    CHECK(p.to == doctest::Approx(weighted_mean(p.to_by_year, rep.days_by_year))
                      .epsilon(1e-12));
    CHECK(p.to_exact ==
          doctest::Approx(weighted_mean(p.tox_by_year, rep.days_by_year))
              .epsilon(1e-12));
  }

  // Consecutive strategies are compared at matching caps, deduplicated.
  REQUIRE(rep.pairs.size() == 10);
  int naive_vt = 0;
  for (const PairComparison& pc : rep.pairs) {
    const StrategyPath* a = find_path(rep, pc.from, pc.from_ec);
    const StrategyPath* b = find_path(rep, pc.to, pc.to_ec);
    REQUIRE(a);
    REQUIRE(b);
    CHECK(pc.dpv == a->pv - b->pv);
    CHECK(pc.dto == a->to - b->to);
    CHECK(pc.ceq_bp == ceq(a->pv, b->pv, fx.cfg.eval));
    CHECK(pc.nceq_bp == nceq(a->pv, b->pv, a->to, b->to, fx.cfg.eval));
    if (pc.from == Strategy::Naive && pc.to == Strategy::VT) ++naive_vt;
  }
  CHECK(naive_vt == 1);

  REQUIRE(rep.r2_oos.size() == 5);
  for (const R2Block& b : rep.r2_oos) {
    REQUIRE(b.r2.size() == 3);
    for (size_t i = 0; i < b.r2.size(); ++i) {
      if (b.undefined[i]) CHECK(std::isnan(b.r2[i]));
      else CHECK(b.r2[i] <= 1.0 + 1e-12);
    }
  }

  // One in-sample fit block per rolling window.
  REQUIRE(rep.r2_is.size() == 2);
  CHECK(rep.r2_is[0].first_oos_year == 2009);
  CHECK(rep.r2_is[1].first_oos_year == 2010);
  for (const IsR2Block& b : rep.r2_is) {
    REQUIRE(b.r2.size() == 3);
    double mean = 0.0;
    for (double v : b.r2) mean += v;
    CHECK(b.mean == doctest::Approx(mean / 3.0).epsilon(1e-12));
  }

  REQUIRE(rep.envelopes.size() == 5);
  for (const EnvelopeBlock& b : rep.envelopes) {
    size_t want = uses_exposure_grid(b.strategy) ? 3 : 1;
    CHECK(b.ecs.size() == want);
    REQUIRE(b.envelope.tau_bp.size() == 101);
    CHECK(b.envelope.tau_bp.front() == 0.0);
    CHECK(b.envelope.tau_bp.back() == doctest::Approx(25.0).epsilon(1e-12));
    REQUIRE(b.envelope.value.size() == 101);
    REQUIRE(b.diff_vs_vt.size() == 101);
    for (int w : b.envelope.winner) {
      CHECK(w >= 0);
      CHECK(w < static_cast<int>(b.ecs.size()));
    }
    if (b.strategy == Strategy::VT)
      for (double d : b.diff_vs_vt) CHECK(std::abs(d) <= 1e-12);
  }

  REQUIRE(rep.sectors.size() == 11);
  for (const SectorBlock& b : rep.sectors) {
    REQUIRE(b.sectors.size() == 2);
    CHECK(b.dates.size() == 518);
    REQUIRE(b.daily.rows() == 518);
    for (Eigen::Index t = 0; t < b.daily.rows(); ++t)
      CHECK(b.daily.row(t).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(b.average.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b.average(0) >= b.average(1));
  }

  std::string text = report_text(rep);
  for (const char* token : {"Naive", "VT", "RW", "DCC", "DCW", "PV"})
    CHECK(text.find(token) != std::string::npos);
}

TEST_CASE("weight paths respect budget and exposure caps") {
  const BacktestFixture& fx = fixture();
  std::filesystem::path wdir =
      std::filesystem::path(fx.cfg.out_dir) / "weights";
  REQUIRE(std::filesystem::exists(wdir));

  size_t files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(wdir)) ++files;
  CHECK(files == 12);  // 11 paths + realized weights

  for (const StrategyPath& p : fx.rep.paths) {
    std::string name = to_string(p.strategy) + "_" +
                       (std::isinf(p.ec) ? std::string("inf")
                                         : (p.ec == 1.0 ? "1" : "1.5")) +
                       ".csv";
    WeightSeries ws = load_weight_series((wdir / name).string());
    REQUIRE(ws.w.rows() == 518);
    CHECK(ws.tickers == fx.tickers);
    CHECK(ws.dates.front().year() == 2009);
    CHECK(ws.dates.back().year() == 2010);
    for (Eigen::Index t = 0; t < ws.w.rows(); ++t) {
      CHECK(ws.w.row(t).sum() == doctest::Approx(1.0).epsilon(1e-8));
      if (!std::isinf(p.ec))
        CHECK(ws.w.row(t).cwiseAbs().sum() <= p.ec + 1e-6);
      if (p.strategy == Strategy::Naive)
        for (Eigen::Index i = 0; i < 3; ++i) CHECK(ws.w(t, i) == 1.0 / 3.0);
      if (p.strategy == Strategy::VT)
        CHECK(ws.w.row(t).minCoeff() >= 0.0);
    }
  }

  WeightSeries realized =
      load_weight_series((wdir / "realized.csv").string());
  CHECK(realized.w.rows() == 518);
  for (Eigen::Index t = 0; t < realized.w.rows(); ++t)
    CHECK(realized.w.row(t).sum() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("equal-weight performance matches a direct computation") {
  const BacktestFixture& fx = fixture();
  std::vector<std::string> tickers = fx.tickers;
  CovMatrixSeries series =
      load_cov_series(fx.cfg.out_dir + "/covariances.csv", &tickers);

  double acc = 0.0;
  long n = 0;
  for (const CovEntry& e : series.entries) {
    if (e.date.year() < 2009) continue;
    acc += e.cov.sum() / 9.0;  // w = (1/3, 1/3, 1/3)
    ++n;
  }
  REQUIRE(n == 518);

  const StrategyPath* naive = find_path(fx.rep, Strategy::Naive, 1.0);
  REQUIRE(naive);
  CHECK(naive->pv == doctest::Approx(acc / static_cast<double>(n))
                         .epsilon(1e-12));
}

TEST_CASE("rerunning the same config reproduces every byte") {
  const BacktestFixture& fx = fixture();

  BacktestReport again = run_backtest(fx.cfg);
  auto dir = temp_dir("backtest_rerun");
  CHECK(report_bytes(fx.rep, dir + "/a.json") ==
        report_bytes(again, dir + "/b.json"));

  auto snap = snapshot_dir(fx.cfg.out_dir);
  REQUIRE(snap.size() == fx.out_snapshot.size());
  for (const auto& [rel, bytes] : fx.out_snapshot) {
    REQUIRE(snap.count(rel) == 1);
    CHECK(snap.at(rel) == bytes);
  }
}

TEST_CASE("persisted covariances reproduce the tick-built run") {
  const BacktestFixture& fx = fixture();

  BacktestConfig cfg = fx.cfg;
  cfg.covariances_path = fx.cfg.out_dir + "/covariances.csv";
  cfg.out_dir = fx.root + "/run_cov";
  BacktestReport rep = run_backtest(cfg);

  // The digest legitimately differs (the config changed); everything the
  // pipeline computes downstream of the covariances must not.
  rep.config_digest = fx.rep.config_digest;
  auto dir = temp_dir("backtest_idem");
  CHECK(report_bytes(rep, dir + "/from_cov.json") ==
        report_bytes(fx.rep, dir + "/from_ticks.json"));

  CHECK(read_file(cfg.out_dir + "/weights/DCW_1.5.csv") ==
        read_file(fx.cfg.out_dir + "/weights/DCW_1.5.csv"));
  CHECK_FALSE(std::filesystem::exists(cfg.out_dir + "/covariances.csv"));
}

TEST_CASE("truncated history replays the early window bit for bit") {
  const BacktestFixture& fx = fixture();

  std::vector<std::string> tickers = fx.tickers;
  CovMatrixSeries full =
      load_cov_series(fx.cfg.out_dir + "/covariances.csv", &tickers);
  CovMatrixSeries head;
  head.tickers = full.tickers;
  for (const CovEntry& e : full.entries)
    if (e.date.year() <= 2009) head.entries.push_back(e);
  std::string head_path = fx.root + "/cov_head.csv";
  save_cov_series(head, head_path);

  BacktestConfig cfg = fx.cfg;
  cfg.covariances_path = head_path;
  cfg.out_dir = fx.root + "/run_head";
  BacktestReport rep = run_backtest(cfg);

  REQUIRE(rep.years == std::vector<int>{2009});
  REQUIRE(rep.days_by_year == std::vector<long>{261});

  // Weights for 2009 never depended on 2010 data: the truncated run's
  // weight files are byte-for-byte prefixes of the full run's.
  for (const auto& entry : std::filesystem::directory_iterator(
           std::filesystem::path(cfg.out_dir) / "weights")) {
    std::string short_bytes = read_file(entry.path().string());
    std::string full_bytes = read_file(
        (std::filesystem::path(fx.cfg.out_dir) / "weights" /
         entry.path().filename())
            .string());
    REQUIRE(full_bytes.size() > short_bytes.size());
    CHECK(full_bytes.compare(0, short_bytes.size(), short_bytes) == 0);
  }

  for (const StrategyPath& p : rep.paths) {
    const StrategyPath* fp = find_path(fx.rep, p.strategy, p.ec);
    REQUIRE(fp);
    CHECK(p.pv_by_year[0] == fp->pv_by_year[0]);
    CHECK(p.to_by_year[0] == fp->to_by_year[0]);
  }
}

TEST_CASE("a single-strategy run skips all cross-strategy output") {
  const BacktestFixture& fx = fixture();

  BacktestConfig cfg = fx.cfg;
  cfg.covariances_path = fx.cfg.out_dir + "/covariances.csv";
  cfg.strategies = {Strategy::Naive};
  cfg.ec_grid = {1.0};
  cfg.out_dir = fx.root + "/run_naive";
  BacktestReport rep = run_backtest(cfg);

  REQUIRE(rep.paths.size() == 1);
  CHECK(rep.pairs.empty());
  CHECK(rep.r2_is.empty());
  REQUIRE(rep.envelopes.size() == 1);
  CHECK(rep.envelopes[0].ecs == std::vector<double>{1.0});
  CHECK(rep.envelopes[0].diff_vs_vt.empty());  // no VT reference line

  const StrategyPath* full_naive = find_path(fx.rep, Strategy::Naive, 1.0);
  REQUIRE(full_naive);
  CHECK(rep.paths[0].pv == full_naive->pv);

  // No model fitting happened, so the window files carry no coefficients.
  std::string params = read_file(cfg.out_dir + "/params/window_2009.txt");
  CHECK(params.find("alpha") == std::string::npos);
  CHECK(params.find("dcc.") == std::string::npos);
  CHECK(params.find("dcw.") == std::string::npos);
}

TEST_CASE("report JSON and CSV emission round-trip losslessly") {
  const BacktestFixture& fx = fixture();
  auto dir = temp_dir("backtest_roundtrip");

  save_report(fx.rep, dir + "/rep.json");
  BacktestReport loaded = load_report(dir + "/rep.json");
  save_report(loaded, dir + "/rep2.json");
  CHECK(read_file(dir + "/rep.json") == read_file(dir + "/rep2.json"));

  emit_reports(fx.rep, dir + "/emit_a");
  emit_reports(loaded, dir + "/emit_b");
  auto snap_a = snapshot_dir(dir + "/emit_a");
  auto snap_b = snapshot_dir(dir + "/emit_b");
  REQUIRE(snap_a.size() == snap_b.size());
  for (const auto& [rel, bytes] : snap_a) {
    REQUIRE(snap_b.count(rel) == 1);
    CHECK(snap_b.at(rel) == bytes);
  }
  for (const char* name :
       {"summary.json", "manifest.json", "pv.csv", "to.csv", "to_exact.csv",
        "ceq.csv", "betc.csv", "r2_oos.csv", "r2_is.csv", "envelope.csv",
        "envelope_breakpoints.csv", "sectors.csv"})
    CHECK(snap_a.count(name) == 1);
}

TEST_CASE("backtest rejects unusable input up front") {
  const BacktestFixture& fx = fixture();

  SUBCASE("bars are mandatory") {
    BacktestConfig cfg = fx.cfg;
    cfg.bars_path.clear();
    CHECK_THROWS_WITH_AS(run_backtest(cfg),
                         doctest::Contains("daily bar"), ConfigError);
  }

  SUBCASE("either ticks or covariances must be given") {
    BacktestConfig cfg = fx.cfg;
    cfg.ticks_path.clear();
    CHECK_THROWS_AS(run_backtest(cfg), ConfigError);
  }

  SUBCASE("not enough calendar years for one window") {
    BacktestConfig cfg = fx.cfg;
    cfg.covariances_path = fx.cfg.out_dir + "/covariances.csv";
    cfg.is_years = 5;
    CHECK_THROWS_AS(run_backtest(cfg), ConfigError);
  }

  SUBCASE("estimation window with too few days is named") {
    std::vector<std::string> tickers = fx.tickers;
    CovMatrixSeries full =
        load_cov_series(fx.cfg.out_dir + "/covariances.csv", &tickers);
    CovMatrixSeries sparse;
    sparse.tickers = full.tickers;
    std::vector<CovEntry> y2008;
    for (const CovEntry& e : full.entries) {
      if (e.date.year() == 2008) y2008.push_back(e);
      else if (e.date.year() == 2009) sparse.entries.push_back(e);
    }
    // Keep only the last 20 days of 2008: fewer than any model needs.
    sparse.entries.insert(sparse.entries.begin(), y2008.end() - 20,
                          y2008.end());
    std::string path = fx.root + "/cov_sparse.csv";
    save_cov_series(sparse, path);

    BacktestConfig cfg = fx.cfg;
    cfg.covariances_path = path;
    CHECK_THROWS_WITH_AS(
        run_backtest(cfg),
        doctest::Contains("estimation window before 2009"), ConfigError);
  }
}

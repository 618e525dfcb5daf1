#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "dcw/errors.hpp"
#include "dcw/persist.hpp"
#include "dcw/realized.hpp"
#include "test_util.hpp"

using namespace dcw;

namespace {

ReturnPanel panel_of(const Eigen::MatrixXd& r) {
  ReturnPanel p;
  p.date = Date::parse("2010-01-04");
  for (int i = 0; i < r.cols(); ++i) p.tickers.push_back("A" + std::to_string(i));
  p.r = r;
  return p;
}

// Direct double-loop evaluation of the kernel sum, the test oracle.
Eigen::MatrixXd kernel_brute_force(const Eigen::MatrixXd& r, double H, int lags) {
  const int m = static_cast<int>(r.cols());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
  for (int h = -lags; h <= lags; ++h) {
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(m, m);
    for (int j = std::abs(h) + 1; j <= r.rows(); ++j)
      gamma += r.row(j - 1).transpose() * r.row(j - 1 - std::abs(h));
    if (h < 0) gamma.transposeInPlace();
    double w = H > 0.0 ? parzen_weight(std::abs(h) / H) : (h == 0 ? 1.0 : 0.0);
    s += w * gamma;
  }
  return s;
}

}  // namespace

TEST_CASE("parzen weights at the reference points") {
  CHECK(parzen_weight(0.0) == 1.0);
  CHECK(parzen_weight(0.5) == 0.25);
  CHECK(parzen_weight(1.0) == 0.0);
  CHECK(parzen_weight(0.25) == doctest::Approx(0.71875).epsilon(1e-15));
  CHECK(parzen_weight(2.0 / 3.0) == doctest::Approx(2.0 / 27.0).epsilon(1e-12));
  CHECK(parzen_weight(1.5) == 0.0);
}

TEST_CASE("bandwidth reproduces the closed-form single-asset case") {
  // J = 100 refresh returns with sum of squares 200 and binned sum of
  // squares 1 give a noise ratio of exactly 1, so H = 3.51 * 100^(3/5).
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(100, 1, std::sqrt(2.0));
  Eigen::MatrixXd binned = Eigen::MatrixXd::Constant(1, 1, 1.0);
  BandwidthResult bw = bandwidth(panel_of(r), panel_of(binned));
  CHECK(bw.H == doctest::Approx(3.51 * std::pow(100.0, 0.6)).epsilon(1e-12));
  CHECK(bw.H == doctest::Approx(55.62975105538507).epsilon(1e-10));
  CHECK(bw.lags == 55);

  Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(100, 1);
  CHECK_THROWS_AS(bandwidth(panel_of(r), panel_of(flat)), DataError);
}

TEST_CASE("autocovariance hand cases") {
  Eigen::MatrixXd r(3, 1);
  r << 1, 2, 3;
  CHECK(autocov_gamma(r, 0)(0, 0) == 14.0);
  CHECK(autocov_gamma(r, 1)(0, 0) == 8.0);
  CHECK(autocov_gamma(r, -1)(0, 0) == 8.0);
  CHECK(autocov_gamma(r, 2)(0, 0) == 3.0);
  CHECK_THROWS_AS(autocov_gamma(r, 3), DataError);

  Eigen::MatrixXd rm(3, 2);
  rm << 1, 0, 0, 1, 1, 1;
  Eigen::MatrixXd g1 = autocov_gamma(rm, 1);
  // gamma_1 = r_2 r_1' + r_3 r_2'
  Eigen::MatrixXd expect(2, 2);
  expect << 0, 1, 1, 1;
  CHECK((g1 - expect).norm() == 0.0);
  CHECK((autocov_gamma(rm, -1) - expect.transpose()).norm() == 0.0);
}

TEST_CASE("kernel hand case with pinned bandwidth") {
  Eigen::MatrixXd r(3, 1);
  r << 0.01, -0.02, 0.01;
  BandwidthResult bw;
  bw.H = 1.5;
  bw.lags = 1;
  KernelResult k = realized_kernel(panel_of(r), bw);
  double expect = 6e-4 + (2.0 / 27.0) * (-8e-4);
  CHECK(k.cov(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(k.cov(0, 0) == doctest::Approx(5.4074074074074074e-4).epsilon(1e-10));
}

TEST_CASE("kernel with zero bandwidth is the plain outer-product sum") {
  Eigen::MatrixXd r(4, 1);
  r << 0.5, -0.25, 0.125, 1.0;
  BandwidthResult bw;
  bw.H = 0.0;
  bw.lags = 0;
  KernelResult k = realized_kernel(panel_of(r), bw);
  CHECK(k.cov(0, 0) == r.col(0).squaredNorm());
  CHECK(k.psd);
}

TEST_CASE("kernel equals the brute-force double loop on random panels") {
  std::mt19937_64 rng(20100104);
  std::normal_distribution<double> normal(0.0, 0.01);
  for (int rep = 0; rep < 60; ++rep) {
    int m = 1 + static_cast<int>(rng() % 3);
    int J = 4 + static_cast<int>(rng() % 17);
    Eigen::MatrixXd r(J, m);
    for (int j = 0; j < J; ++j)
      for (int i = 0; i < m; ++i) r(j, i) = normal(rng);
    int bins = 3 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd binned(bins, m);
    for (int j = 0; j < bins; ++j)
      for (int i = 0; i < m; ++i) binned(j, i) = normal(rng);

    BandwidthResult bw = bandwidth(panel_of(r), panel_of(binned));
    CHECK(bw.lags <= J - 1);
    KernelResult k = realized_kernel(panel_of(r), panel_of(binned));
    Eigen::MatrixXd ref = kernel_brute_force(r, bw.H, bw.lags);
    ref = 0.5 * (ref + ref.transpose()).eval();
    CHECK((k.cov - ref).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((k.cov - k.cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("invertibility repair") {
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  RepairResult r = ensure_invertible(id);
  CHECK(!r.repaired);
  CHECK(r.ridge == 0.0);
  CHECK((r.cov - id).norm() == 0.0);

  Eigen::MatrixXd singular(2, 2);
  singular << 1, 1, 1, 1;
  RepairResult s = ensure_invertible(singular);
  CHECK(s.repaired);
  CHECK(s.ridge == doctest::Approx(1e-8).epsilon(1e-12));
  Eigen::LLT<Eigen::MatrixXd> llt(s.cov);
  CHECK(llt.info() == Eigen::Success);

  CHECK_THROWS_AS(ensure_invertible(Eigen::MatrixXd::Zero(2, 2)), NumericError);
}

TEST_CASE("realized correlation normalizes the diagonal exactly") {
  Eigen::MatrixXd s(2, 2);
  s << 4, 1, 1, 1;
  Eigen::MatrixXd c = realized_correlation(s);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(1, 1) == 1.0);
  CHECK(c(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0, 0, 0;
  CHECK_THROWS_AS(realized_correlation(bad), NumericError);

  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd p = dcw_test::random_pd(4, rng);
    Eigen::MatrixXd corr = realized_correlation(p);
    CHECK(corr.diagonal().isOnes(0.0));
    CHECK(corr.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("realized weights reference cases and optimality") {
  Eigen::MatrixXd s(2, 2);
  s << 1, 0.8, 0.8, 0.7;
  Eigen::VectorXd nu = realized_weights(s);
  CHECK(nu(0) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(nu(1) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(nu.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(nu.dot(s * nu) == doctest::Approx(0.6).epsilon(1e-10));

  Eigen::MatrixXd d = Eigen::Vector2d(1, 3).asDiagonal();
  Eigen::VectorXd nud = realized_weights(d);
  CHECK(nud(0) == doctest::Approx(0.75).epsilon(1e-12));

  // scale invariance and optimality against random budget-feasible weights
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd p = dcw_test::random_pd(4, rng);
  Eigen::VectorXd v = realized_weights(p);
  CHECK((realized_weights(3.7 * p) - v).cwiseAbs().maxCoeff() <= 1e-10);
  double best = v.dot(p * v);
  for (int rep = 0; rep < 1000; ++rep) {
    Eigen::VectorXd w(4);
    for (int i = 0; i < 4; ++i) w(i) = normal(rng);
    w.array() += (1.0 - w.sum()) / 4.0;
    CHECK(w.dot(p * w) >= best - 1e-12);
  }
}

TEST_CASE("quadratic-utility weights") {
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd r(2);
  r << 0.02, 0.04;
  Eigen::VectorXd w = realized_weights_quadutil(id, r, 2.0);
  CHECK(w(0) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(w(1) == doctest::Approx(0.02).epsilon(1e-14));
  Eigen::MatrixXd d = Eigen::Vector2d(2, 4).asDiagonal();
  Eigen::VectorXd w2 = realized_weights_quadutil(d, r, 1.0);
  CHECK(w2(0) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(w2(1) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(realized_weights_quadutil(id, Eigen::Vector2d::Zero(), 1.0).norm() == 0.0);
}

TEST_CASE("covariance series persists with exact round trip") {
  std::mt19937_64 rng(123);
  CovMatrixSeries series;
  series.tickers = {"AAA", "BBB", "CCC"};
  Date d = Date::parse("2010-01-04");
  for (int t = 0; t < 5; ++t) {
    CovEntry e;
    e.date = d + t;
    e.cov = dcw_test::random_pd(3, rng);
    e.psd = true;
    e.repaired = t == 2;
    e.ridge = t == 2 ? 1e-8 : 0.0;
    series.entries.push_back(e);
  }
  std::string dir = dcw_test::temp_dir("covseries");
  save_cov_series(series, dir + "/cov.csv");
  CovMatrixSeries loaded = load_cov_series(dir + "/cov.csv", &series.tickers);
  REQUIRE(loaded.entries.size() == 5);
  for (int t = 0; t < 5; ++t) {
    CHECK(loaded.entries[t].date == series.entries[t].date);
    CHECK((loaded.entries[t].cov - series.entries[t].cov).cwiseAbs().maxCoeff() ==
          0.0);
  }
  std::vector<std::string> wrong = {"AAA", "BBB", "ZZZ"};
  CHECK_THROWS_AS(load_cov_series(dir + "/cov.csv", &wrong), DataError);
}

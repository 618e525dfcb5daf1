#include "dcw/models.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "dcw/errors.hpp"

namespace dcw {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Point2 {
  double x = 0.0, y = 0.0;
};

/// Nelder-Mead on two parameters. Infeasible points must evaluate to +inf.
/// Keeps the running best in `trace`, which is non-increasing by
/// construction.
Point2 nelder_mead(const std::function<double(double, double)>& f, Point2 start,
                   double step, double* best_obj, FitTrace* trace) {
  std::array<Point2, 3> xs{start, Point2{start.x + step, start.y},
                           Point2{start.x, start.y + step}};
  std::array<double, 3> fs;
  for (int i = 0; i < 3; ++i) {
    fs[i] = f(xs[i].x, xs[i].y);
    ++trace->evaluations;
  }

  auto order = [&] {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2 - i; ++j)
        if (fs[j + 1] < fs[j]) {
          std::swap(fs[j], fs[j + 1]);
          std::swap(xs[j], xs[j + 1]);
        }
  };
  auto record = [&] {
    double b = std::min(*best_obj, fs[0]);
    *best_obj = b;
    trace->best.push_back(b);
  };

  order();
  record();
  for (int iter = 0; iter < 300; ++iter) {
    double spread = fs[2] - fs[0];
    double diam = std::max(std::hypot(xs[1].x - xs[0].x, xs[1].y - xs[0].y),
                           std::hypot(xs[2].x - xs[0].x, xs[2].y - xs[0].y));
    if ((std::isfinite(spread) && spread <= 1e-14 * (1.0 + std::abs(fs[0])) &&
         diam <= 1e-10))
      break;

    Point2 c{0.5 * (xs[0].x + xs[1].x), 0.5 * (xs[0].y + xs[1].y)};
    auto eval = [&](Point2 p) {
      ++trace->evaluations;
      return f(p.x, p.y);
    };

    Point2 xr{c.x + (c.x - xs[2].x), c.y + (c.y - xs[2].y)};
    double fr = eval(xr);
    if (fr < fs[0]) {
      Point2 xe{c.x + 2.0 * (c.x - xs[2].x), c.y + 2.0 * (c.y - xs[2].y)};
      double fe = eval(xe);
      if (fe < fr) {
        xs[2] = xe;
        fs[2] = fe;
      } else {
        xs[2] = xr;
        fs[2] = fr;
      }
    } else if (fr < fs[1]) {
      xs[2] = xr;
      fs[2] = fr;
    } else {
      bool outside = fr < fs[2];
      Point2 xc = outside
                      ? Point2{c.x + 0.5 * (xr.x - c.x), c.y + 0.5 * (xr.y - c.y)}
                      : Point2{c.x + 0.5 * (xs[2].x - c.x), c.y + 0.5 * (xs[2].y - c.y)};
      double fc = eval(xc);
      if (fc < std::min(fr, fs[2])) {
        xs[2] = xc;
        fs[2] = fc;
      } else {
        for (int i = 1; i < 3; ++i) {
          xs[i] = Point2{xs[0].x + 0.5 * (xs[i].x - xs[0].x),
                         xs[0].y + 0.5 * (xs[i].y - xs[0].y)};
          fs[i] = eval(xs[i]);
        }
      }
    }
    order();
    record();
  }
  *best_obj = fs[0];
  return xs[0];
}

/// Grid scan (first strict improvement wins, so earlier candidates are
/// preferred on ties) followed by simplex refinement.
Point2 minimize2(const std::function<double(double, double)>& f,
                 const std::vector<Point2>& grid, double refine_step,
                 double* obj_out, FitTrace* trace) {
  Point2 best = grid.front();
  double fbest = f(best.x, best.y);
  ++trace->evaluations;
  trace->best.push_back(fbest);
  for (size_t i = 1; i < grid.size(); ++i) {
    double v = f(grid[i].x, grid[i].y);
    ++trace->evaluations;
    if (v < fbest) {
      fbest = v;
      best = grid[i];
    }
    trace->best.push_back(fbest);
  }
  Point2 refined = nelder_mead(f, best, refine_step, &fbest, trace);
  *obj_out = fbest;
  return refined;
}

}  // namespace

HarParams har_fit(std::span<const double> s2) {
  const long T = static_cast<long>(s2.size());
  if (T <= 32) throw FitError("variance series too short (need > 32)");
  const long n = T - 22;
  Eigen::MatrixXd X(n, 4);
  Eigen::VectorXd y(n);
  for (long t = 22; t < T; ++t) {
    double m5 = 0.0, m22 = 0.0;
    for (long j = 1; j <= 22; ++j) {
      m22 += s2[static_cast<size_t>(t - j)];
      if (j <= 5) m5 += s2[static_cast<size_t>(t - j)];
    }
    long row = t - 22;
    X(row, 0) = 1.0;
    X(row, 1) = s2[static_cast<size_t>(t - 1)];
    X(row, 2) = m5 / 5.0;
    X(row, 3) = m22 / 22.0;
    y(row) = s2[static_cast<size_t>(t)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < 4) throw FitError("collinear regressors in variance autoregression");
  Eigen::VectorXd beta = qr.solve(y);
  return HarParams{beta(0), beta(1), beta(2), beta(3)};
}

HarForecast har_forecast(const HarParams& p, std::span<const double> history) {
  if (history.size() < 22) throw DataError("variance history shorter than 22");
  const size_t T = history.size();
  double m5 = 0.0, m22 = 0.0;
  for (size_t j = 1; j <= 22; ++j) {
    m22 += history[T - j];
    if (j <= 5) m5 += history[T - j];
  }
  HarForecast out;
  out.value = p.alpha0 + p.alpha1 * history[T - 1] + p.alpha2 * m5 / 5.0 +
              p.alpha3 * m22 / 22.0;
  if (out.value < 0.0) {
    out.value = 1e-8;
    out.floored = true;
  }
  return out;
}

Eigen::MatrixXd vt_forecast(const Eigen::VectorXd& variances) {
  if ((variances.array() <= 0.0).any())
    throw NumericError("variance forecast must be positive");
  return variances.asDiagonal();
}

DccFit dcc_fit(const std::vector<Eigen::MatrixXd>& correlations) {
  const size_t T = correlations.size();
  if (T < 30) throw FitError("correlation series too short (need >= 30)");
  const Eigen::Index m = correlations[0].rows();
  for (const auto& p : correlations)
    if (p.rows() != m || p.cols() != m)
      throw DataError("correlation dimensions are inconsistent");

  Eigen::MatrixXd pbar = Eigen::MatrixXd::Zero(m, m);
  for (const auto& p : correlations) pbar += p;
  pbar /= static_cast<double>(T);

  auto objective = [&](double a, double b) -> double {
    if (a < 0.0 || b < 0.0 || a * a + b * b > 1.0 - 1e-6) return kInf;
    const double a2 = a * a, b2 = b * b, w = 1.0 - a2 - b2;
    Eigen::MatrixXd r = pbar;
    double obj = 0.0;
    for (size_t t = 1; t < T; ++t) {
      r = (w * pbar + a2 * correlations[t - 1] + b2 * r).eval();
      obj += (correlations[t] - r).squaredNorm();
    }
    return obj;
  };

  std::vector<Point2> grid;
  for (double a = 0.0; a <= 0.95 + 1e-12; a += 0.05)
    for (double b = 0.0; b <= 0.99 + 1e-12; b += 0.05)
      if (a * a + b * b <= 1.0 - 1e-6) grid.push_back({a, b});
  for (double b : {0.975, 0.99})
    for (double a = 0.0; a * a + b * b <= 1.0 - 1e-6; a += 0.025)
      grid.push_back({a, b});

  DccFit fit;
  double obj = 0.0;
  Point2 best = minimize2(objective, grid, 0.02, &obj, &fit.trace);

  // Flat objectives (e.g. constant correlation inputs) resolve to the origin.
  double origin = objective(0.0, 0.0);
  if (origin <= obj + 1e-12 * (1.0 + std::abs(origin))) {
    best = {0.0, 0.0};
    obj = origin;
  }

  fit.params = DccParams{best.x, best.y, std::move(pbar)};
  fit.objective = obj;
  return fit;
}

Eigen::MatrixXd dcc_forecast(const DccParams& p, const Eigen::MatrixXd& prev_corr,
                             const Eigen::MatrixXd& prev_r) {
  const double a2 = p.a * p.a, b2 = p.b * p.b;
  Eigen::MatrixXd r =
      (1.0 - a2 - b2) * p.pbar + a2 * prev_corr + b2 * prev_r;
  r.diagonal().setOnes();
  return r;
}

Eigen::MatrixXd dcc_covariance(const Eigen::MatrixXd& correlation,
                               const Eigen::VectorXd& variances) {
  if ((variances.array() <= 0.0).any())
    throw NumericError("variances must be positive");
  Eigen::VectorXd sd = variances.array().sqrt();
  Eigen::MatrixXd omega = sd.asDiagonal() * correlation * sd.asDiagonal();
  omega.diagonal() = variances;
  return omega;
}

RepairResult rw_forecast(const Eigen::MatrixXd& prev_cov) {
  return ensure_invertible(prev_cov);
}

DcwFit dcw_fit(const Eigen::MatrixXd& nu) {
  const Eigen::Index T = nu.rows();
  const Eigen::Index m = nu.cols();
  if (T < 30) throw FitError("weight series too short (need >= 30)");

  DcwFit fit;
  fit.params.astar.resize(m);
  fit.params.bstar.resize(m);
  fit.params.omega_bar = nu.colwise().mean();
  fit.objective.resize(m);
  fit.trace.resize(static_cast<size_t>(m));

  std::vector<Point2> grid;
  for (double a = -1.0; a <= 1.0 + 1e-12; a += 0.1)
    for (double b = -0.95; b <= 0.95 + 1e-12; b += 0.05) grid.push_back({a, b});
  for (double b : {-0.99, -0.975, 0.975, 0.99})
    for (double a = -1.0; a <= 1.0 + 1e-12; a += 0.25) grid.push_back({a, b});
  // Put the origin first so flat objectives resolve to it.
  std::stable_sort(grid.begin(), grid.end(), [](const Point2& p, const Point2& q) {
    return std::abs(p.x) + std::abs(p.y) < std::abs(q.x) + std::abs(q.y);
  });

  for (Eigen::Index i = 0; i < m; ++i) {
    const double wbar = fit.params.omega_bar(i);
    auto column = nu.col(i);
    auto objective = [&](double a, double b) -> double {
      if (std::abs(b) > 1.0 - 1e-6) return kInf;
      double w = wbar;
      double obj = 0.0;
      const double c = (1.0 - a - b) * wbar;
      for (Eigen::Index t = 1; t < T; ++t) {
        w = c + a * column(t - 1) + b * w;
        double e = column(t) - w;
        obj += e * e;
      }
      return obj;
    };

    double obj = 0.0;
    Point2 best = minimize2(objective, grid, 0.02, &obj, &fit.trace[static_cast<size_t>(i)]);
    double origin = objective(0.0, 0.0);
    if (origin <= obj + 1e-12 * (1.0 + std::abs(origin))) {
      best = {0.0, 0.0};
      obj = origin;
    }
    fit.params.astar(i) = best.x;
    fit.params.bstar(i) = best.y;
    fit.objective(i) = obj;
  }
  return fit;
}

DcwForecast dcw_forecast(const DcwParams& p, const Eigen::VectorXd& prev_nu,
                         const Eigen::VectorXd& prev_omega_raw) {
  const Eigen::Index m = p.omega_bar.size();
  if (prev_nu.size() != m || prev_omega_raw.size() != m ||
      p.astar.size() != m || p.bstar.size() != m)
    throw DataError("weight recursion inputs have mismatched length");
  DcwForecast out;
  out.raw = (Eigen::VectorXd::Ones(m) - p.astar - p.bstar).cwiseProduct(p.omega_bar) +
            p.astar.cwiseProduct(prev_nu) + p.bstar.cwiseProduct(prev_omega_raw);
  out.divisor = out.raw.sum();
  if (std::abs(out.divisor) < 1e-8)
    throw NumericError("weight forecast sum too close to zero to normalize");
  out.normalized = out.raw / out.divisor;
  return out;
}

Eigen::VectorXd naive_weights(Eigen::Index m) {
  if (m <= 0) throw ConfigError("asset count must be positive");
  return Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
}

}  // namespace dcw

#include "dcw/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dcw/errors.hpp"
#include "dcw/realized.hpp"

namespace dcw {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Internal state of the l1-constrained solve
///   min x'Ax + c'x  s.t.  i'x = 1,  sum|x| <= ec.
/// A working set is a sign state per coordinate (0 pins x_i = 0) plus the
/// exposure row when it is held as an equality.
struct L1Qp {
  const Eigen::MatrixXd& A;
  const Eigen::VectorXd& c;
  double ec;
  const SolverConfig& cfg;
  bool long_only;  // ec == 1: the feasible set is the unit simplex

  Eigen::VectorXd x;
  std::vector<std::int8_t> sign;
  bool exposure_active = false;
  double lambda = 0.0;  // budget multiplier
  double mu = 0.0;      // exposure multiplier, >= 0 at a KKT point
  int iterations = 0;

  explicit L1Qp(const Eigen::MatrixXd& a, const Eigen::VectorXd& cc, double e,
                const SolverConfig& f)
      : A(a), c(cc), ec(e), cfg(f), long_only(e <= 1.0 + 1e-12) {}

  Eigen::Index dim() const { return A.rows(); }

  double exposure(const Eigen::VectorXd& v) const { return v.cwiseAbs().sum(); }

  /// Equality-constrained subproblem on the current working set. Returns the
  /// candidate point; multipliers land in lambda / mu.
  Eigen::VectorXd solve_subproblem() {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < dim(); ++i)
      if (sign[static_cast<size_t>(i)] != 0) free.push_back(i);
    const Eigen::Index nf = static_cast<Eigen::Index>(free.size());
    if (nf == 0) throw AllocationError("all weights pinned to zero");

    Eigen::MatrixXd K(nf, nf);
    Eigen::VectorXd cf(nf), sf(nf);
    for (Eigen::Index p = 0; p < nf; ++p) {
      cf(p) = c(free[static_cast<size_t>(p)]);
      sf(p) = sign[static_cast<size_t>(free[static_cast<size_t>(p)])];
      for (Eigen::Index q = 0; q < nf; ++q)
        K(p, q) = A(free[static_cast<size_t>(p)], free[static_cast<size_t>(q)]);
    }

    // The exposure row is parallel to the budget row when every free sign is
    // equal; it cannot bind there (ec > 1), so drop it.
    if (exposure_active) {
      bool uniform = true;
      for (Eigen::Index p = 1; p < nf; ++p)
        if (sf(p) != sf(0)) uniform = false;
      if (uniform) exposure_active = false;
    }

    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
      throw NumericError("allocation: covariance block not positive definite");

    const int k = exposure_active ? 2 : 1;
    Eigen::MatrixXd B(nf, k);
    B.col(0).setOnes();
    if (k == 2) B.col(1) = sf;
    Eigen::MatrixXd KiB = llt.solve(B);
    Eigen::VectorXd Kic = llt.solve(cf);
    Eigen::VectorXd b(k);
    b(0) = 1.0;
    if (k == 2) b(1) = ec;
    Eigen::MatrixXd G = B.transpose() * KiB;
    Eigen::VectorXd rhs = 2.0 * b + B.transpose() * Kic;
    Eigen::VectorXd theta = G.ldlt().solve(rhs);

    lambda = theta(0);
    mu = k == 2 ? -theta(1) : 0.0;

    Eigen::VectorXd xf = 0.5 * (KiB * theta - Kic);
    Eigen::VectorXd full = Eigen::VectorXd::Zero(dim());
    for (Eigen::Index p = 0; p < nf; ++p) full(free[static_cast<size_t>(p)]) = xf(p);
    return full;
  }

  /// True when the candidate respects the constraints that are *not* in the
  /// working set (sign consistency; exposure cap while inactive).
  bool candidate_feasible(const Eigen::VectorXd& cand) const {
    double scale = 1.0 + cand.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < dim(); ++i) {
      int s = sign[static_cast<size_t>(i)];
      if (s != 0 && s * cand(i) < -cfg.feas_tol * scale) return false;
    }
    if (!exposure_active && !long_only)
      return exposure(cand) <= ec + cfg.feas_tol * (1.0 + ec);
    return true;
  }

  /// Largest feasible step from x toward cand; applies the step and adds the
  /// blocking constraint to the working set.
  void partial_step(const Eigen::VectorXd& cand) {
    Eigen::VectorXd d = cand - x;
    double scale = 1.0 + x.cwiseAbs().maxCoeff();

    if (exposure_active || long_only) {
      // Signs are pinned; the first coordinate driven to zero blocks.
      double alpha = 1.0;
      Eigen::Index blocker = -1;
      for (Eigen::Index i = 0; i < dim(); ++i) {
        int s = sign[static_cast<size_t>(i)];
        if (s == 0) continue;
        if (s * d(i) < 0.0) {
          double a = -x(i) / d(i);
          if (a < alpha - 1e-15) {
            alpha = std::max(0.0, a);
            blocker = i;
          }
        }
      }
      x += alpha * d;
      if (blocker >= 0) {
        sign[static_cast<size_t>(blocker)] = 0;
        x(blocker) = 0.0;
      }
      return;
    }

    // Exposure inactive: walk the piecewise-linear gross exposure along the
    // segment and stop exactly where it reaches ec.
    std::vector<double> kinks{0.0, 1.0};
    for (Eigen::Index i = 0; i < dim(); ++i)
      if (d(i) != 0.0) {
        double a = -x(i) / d(i);
        if (a > 0.0 && a < 1.0) kinks.push_back(a);
      }
    std::sort(kinks.begin(), kinks.end());

    double e_prev = exposure(x);
    double a_prev = 0.0;
    for (size_t k = 1; k < kinks.size(); ++k) {
      double a_next = kinks[k];
      if (a_next <= a_prev) continue;
      Eigen::VectorXd xn = x + a_next * d;
      double e_next = exposure(xn);
      if (e_next >= ec - 1e-300) {
        double t = e_next > e_prev
                       ? (ec - e_prev) / (e_next - e_prev)
                       : 1.0;
        double alpha = a_prev + t * (a_next - a_prev);
        x += alpha * d;
        exposure_active = true;
        for (Eigen::Index i = 0; i < dim(); ++i) {
          if (std::abs(x(i)) <= 1e-13 * scale) {
            x(i) = 0.0;
            sign[static_cast<size_t>(i)] = 0;
          } else {
            sign[static_cast<size_t>(i)] = x(i) > 0.0 ? 1 : -1;
          }
        }
        return;
      }
      e_prev = e_next;
      a_prev = a_next;
    }
    // No crossing found: take the full step (candidate was feasible after all).
    x = cand;
  }

  /// Checks multiplier signs; releases the most violated working constraint.
  /// Returns true when the point is KKT-certified.
  bool release_or_done() {
    Eigen::VectorXd grad = 2.0 * A * x + c;
    double kscale = 1.0 + grad.cwiseAbs().maxCoeff();

    if (exposure_active && mu < -cfg.kkt_tol * kscale) {
      exposure_active = false;
      return false;
    }
    double mu_eff = exposure_active ? std::max(mu, 0.0) : 0.0;

    double worst = cfg.kkt_tol * kscale;
    Eigen::Index release = -1;
    int release_sign = 0;
    for (Eigen::Index i = 0; i < dim(); ++i) {
      if (sign[static_cast<size_t>(i)] != 0) continue;
      double v = grad(i) - lambda;
      double violation = long_only ? -v : std::abs(v) - mu_eff;
      if (violation > worst) {
        worst = violation;
        release = i;
        release_sign = long_only ? 1 : (v > 0.0 ? -1 : 1);
      }
    }
    if (release >= 0) {
      sign[static_cast<size_t>(release)] = static_cast<std::int8_t>(release_sign);
      return false;
    }
    return true;
  }

  double kkt_residual() const {
    Eigen::VectorXd grad = 2.0 * A * x + c;
    double mu_eff = exposure_active ? std::max(mu, 0.0) : 0.0;
    double r = std::abs(x.sum() - 1.0);
    r = std::max(r, exposure(x) - ec);
    for (Eigen::Index i = 0; i < dim(); ++i) {
      int s = sign[static_cast<size_t>(i)];
      double v = grad(i) - lambda;
      if (s != 0)
        r = std::max(r, std::abs(v + mu_eff * s));
      else if (long_only)
        r = std::max(r, -v);
      else
        r = std::max(r, std::abs(v) - mu_eff);
    }
    return std::max(r, 0.0);
  }

  void run() {
    while (iterations < cfg.max_iter) {
      ++iterations;
      Eigen::VectorXd cand = solve_subproblem();
      if (candidate_feasible(cand)) {
        x = cand;
        if (release_or_done()) return;
      } else {
        partial_step(cand);
      }
    }
    throw AllocationError("exposure-constrained solve did not converge");
  }
};

Eigen::VectorXd budget_only(const Eigen::MatrixXd& A, const Eigen::VectorXd& c,
                            double* lambda_out) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw NumericError("allocation: matrix not positive definite");
  Eigen::VectorXd u = llt.solve(Eigen::VectorXd::Ones(A.rows()));
  Eigen::VectorXd v = llt.solve(c);
  double denom = u.sum();
  if (!(std::abs(denom) > 0.0))
    throw NumericError("allocation: degenerate budget normalization");
  double lambda = (2.0 + v.sum()) / denom;
  if (lambda_out) *lambda_out = lambda;
  return 0.5 * (lambda * u - v);
}

struct SolveOutput {
  Eigen::VectorXd x;
  bool entered_active_phase = false;
  int iterations = 0;
  double kkt = 0.0;
  std::vector<std::int8_t> sign;
  bool exposure_active = false;
};

SolveOutput solve_l1(const Eigen::MatrixXd& A, const Eigen::VectorXd& c, double ec,
                     const SolverConfig& cfg, const WarmStart* warm) {
  const Eigen::Index m = A.rows();
  SolveOutput out;

  double lambda = 0.0;
  Eigen::VectorXd unconstrained = budget_only(A, c, &lambda);
  if (unconstrained.cwiseAbs().sum() <= ec * (1.0 + cfg.feas_tol) + cfg.feas_tol) {
    out.x = unconstrained;
    Eigen::VectorXd grad = 2.0 * A * unconstrained + c;
    out.kkt = (grad.array() - lambda).abs().maxCoeff();
    out.sign.resize(static_cast<size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i)
      out.sign[static_cast<size_t>(i)] =
          unconstrained(i) > 0.0 ? 1 : (unconstrained(i) < 0.0 ? -1 : 0);
    return out;
  }

  L1Qp qp(A, c, ec, cfg);
  bool warm_ok = false;
  if (warm && warm->sign.size() == static_cast<size_t>(m)) {
    qp.sign = warm->sign;
    qp.exposure_active = warm->exposure_active && !qp.long_only;
    bool any_free = false;
    for (auto s : qp.sign) {
      if (s != 0) any_free = true;
      if (qp.long_only && s < 0) qp.exposure_active = false;
    }
    if (qp.long_only)
      for (auto& s : qp.sign)
        if (s < 0) s = 0;
    if (any_free) {
      try {
        Eigen::VectorXd cand = qp.solve_subproblem();
        if (qp.candidate_feasible(cand)) {
          qp.x = cand;
          warm_ok = true;
        }
      } catch (const Error&) {
        warm_ok = false;
      }
    }
  }
  if (!warm_ok) {
    qp.x = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    qp.sign.assign(static_cast<size_t>(m), 1);
    qp.exposure_active = false;
  }
  qp.run();

  out.x = qp.x;
  out.entered_active_phase = true;
  out.iterations = qp.iterations;
  out.kkt = qp.kkt_residual();
  out.sign = qp.sign;
  out.exposure_active = qp.exposure_active;
  return out;
}

}  // namespace

Eigen::VectorXd min_variance(const Eigen::MatrixXd& omega) {
  return realized_weights(omega);
}

AllocationResult constrained_min_variance(const Eigen::MatrixXd& omega, double ec,
                                          const SolverConfig& cfg,
                                          const WarmStart* warm) {
  const Eigen::Index m = omega.rows();
  if (m < 1 || omega.cols() != m) throw DataError("covariance must be square");
  if (std::isnan(ec) || ec < 1.0 - 1e-12)
    throw ConfigError("exposure cap must be >= 1");

  AllocationResult res;
  if (!std::isfinite(ec)) {
    res.weights = min_variance(omega);
    res.objective = res.weights.dot(omega * res.weights);
    Eigen::VectorXd grad = 2.0 * omega * res.weights;
    double lambda = grad.mean();
    res.kkt_residual = (grad.array() - lambda).abs().maxCoeff();
    res.state.sign.resize(static_cast<size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i)
      res.state.sign[static_cast<size_t>(i)] =
          res.weights(i) > 0.0 ? 1 : (res.weights(i) < 0.0 ? -1 : 0);
    return res;
  }

  // The ridge keeps degenerate optima unique; scaling it by trace/M keeps
  // argmin(c * Omega) == argmin(Omega).
  double ridge = cfg.tie_break * omega.trace() / static_cast<double>(m);
  Eigen::MatrixXd A = omega + ridge * Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(m);

  SolveOutput s = solve_l1(A, c, ec, cfg, warm);
  res.weights = s.x;
  res.binding = s.entered_active_phase;
  res.iterations = s.iterations;
  res.objective = s.x.dot(omega * s.x);
  res.kkt_residual = s.kkt;
  res.state.sign = s.sign;
  res.state.exposure_active = s.exposure_active;
  return res;
}

Eigen::VectorXd project_to_exposure(const Eigen::VectorXd& w, double ec,
                                    const SolverConfig& cfg) {
  const Eigen::Index m = w.size();
  if (m < 1) throw DataError("cannot project an empty weight vector");
  if (std::isnan(ec) || ec < 1.0 - 1e-12)
    throw ConfigError("exposure cap must be >= 1");
  if (!std::isfinite(ec))
    return w + Eigen::VectorXd::Constant(m, (1.0 - w.sum()) / static_cast<double>(m));

  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd c = -2.0 * w;
  return solve_l1(A, c, ec, cfg, nullptr).x;
}

Eigen::VectorXd qp_oracle(const Eigen::MatrixXd& omega, double ec) {
  const Eigen::Index m = omega.rows();
  if (m > 3) throw ConfigError("oracle supports at most 3 assets");
  if (std::isnan(ec) || ec < 1.0 - 1e-12)
    throw ConfigError("exposure cap must be >= 1");
  if (!std::isfinite(ec) || m == 1) {
    return m == 1 ? Eigen::VectorXd::Ones(1) : min_variance(omega);
  }

  auto objective = [&](const Eigen::VectorXd& w) { return w.dot(omega * w); };

  if (m == 2) {
    auto weights = [](double t) {
      Eigen::Vector2d w;
      w << t, 1.0 - t;
      return w;
    };
    double best_t = 0.5, best = kInf;
    auto scan = [&](double lo, double hi, double step) {
      for (double t = lo; t <= hi + 1e-15; t += step) {
        Eigen::Vector2d w = weights(t);
        if (w.cwiseAbs().sum() > ec + 1e-12) continue;
        double f = objective(w);
        if (f < best) {
          best = f;
          best_t = t;
        }
      }
    };
    scan(-ec, ec, 1e-3);
    scan(best_t - 2e-3, best_t + 2e-3, 1e-5);
    scan(best_t - 2e-5, best_t + 2e-5, 1e-7);
    return weights(best_t);
  }

  auto weights3 = [](double t1, double t2) {
    Eigen::Vector3d w;
    w << t1, t2, 1.0 - t1 - t2;
    return w;
  };
  double b1 = 1.0 / 3, b2 = 1.0 / 3, best = kInf;
  auto scan = [&](double lo1, double hi1, double lo2, double hi2, double step) {
    for (double t1 = lo1; t1 <= hi1 + 1e-15; t1 += step)
      for (double t2 = lo2; t2 <= hi2 + 1e-15; t2 += step) {
        Eigen::Vector3d w = weights3(t1, t2);
        if (w.cwiseAbs().sum() > ec + 1e-12) continue;
        double f = objective(w);
        if (f < best) {
          best = f;
          b1 = t1;
          b2 = t2;
        }
      }
  };
  scan(-ec, ec, -ec, ec, 4e-3);
  scan(b1 - 8e-3, b1 + 8e-3, b2 - 8e-3, b2 + 8e-3, 1e-4);
  scan(b1 - 2e-4, b1 + 2e-4, b2 - 2e-4, b2 + 2e-4, 2.5e-6);
  return weights3(b1, b2);
}

}  // namespace dcw

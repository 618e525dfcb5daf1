#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace dcw {

struct SolverConfig {
  double feas_tol = 1e-9;   // constraint violation tolerance
  double kkt_tol = 1e-8;    // stationarity / multiplier tolerance
  int max_iter = 500;
  double tie_break = 1e-10;  // relative ridge that keeps optima unique
};

/// Sign pattern and constraint activity of a previous solve; speeds up
/// sequences of related problems. Warm and cold starts agree within solver
/// tolerance because the regularized problem has a unique optimum.
struct WarmStart {
  std::vector<std::int8_t> sign;  // -1, 0, +1 per coordinate
  bool exposure_active = false;
};

struct AllocationResult {
  Eigen::VectorXd weights;
  bool binding = false;   // gross-exposure cap active at the optimum
  int iterations = 0;
  double objective = 0.0;  // w' Omega w against the unregularized matrix
  double kkt_residual = 0.0;
  WarmStart state;  // reusable for the next solve
};

/// Unconstrained minimum variance: (i' Omega^{-1} i)^{-1} Omega^{-1} i.
Eigen::VectorXd min_variance(const Eigen::MatrixXd& omega);

/// Minimizes w' Omega w subject to sum(w) = 1 and sum(|w|) <= ec via a
/// primal active set over coordinate sign states. ec may be infinity; ec = 1
/// is the long-only simplex. A tie-break ridge of
/// tie_break * trace(Omega)/M * ||w||^2 keeps the optimum unique without
/// breaking scale invariance. Throws ConfigError for ec < 1 and
/// AllocationError when no KKT-certified point is found within max_iter.
AllocationResult constrained_min_variance(const Eigen::MatrixXd& omega, double ec,
                                          const SolverConfig& cfg = {},
                                          const WarmStart* warm = nullptr);

/// Euclidean projection onto {sum(w) = 1, sum(|w|) <= ec}; used to impose an
/// exposure cap on directly forecast weight vectors.
Eigen::VectorXd project_to_exposure(const Eigen::VectorXd& w, double ec,
                                    const SolverConfig& cfg = {});

/// Reference solution by exhaustive grid search with local refinement.
/// Supports M <= 3 only; meant for tests, not production use.
Eigen::VectorXd qp_oracle(const Eigen::MatrixXd& omega, double ec);

}  // namespace dcw

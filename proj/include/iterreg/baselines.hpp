#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "iterreg/pdsolver.hpp"

namespace iterreg {

/// 1/2 ||A x - b||^2 + lambda ||x||_1
double lasso_objective(const LinOp& A, ConstSpan b, double lambda, ConstSpan x);

/// Largest violation of the Lasso optimality conditions, divided by lambda.
double lasso_kkt_residual(const LinOp& A, ConstSpan b, double lambda, ConstSpan x);

struct LassoResult {
  Vector x;
  std::size_t iters = 0;
  double kkt = 0.0;
  bool hit_max_iters = false;  // returned the last iterate without meeting tol
};

/// Monotone FISTA with step 1/||A||^2, stopped when the scaled KKT residual <= tol.
LassoResult fista_lasso(const LinOp& A, ConstSpan b, double lambda, ConstSpan x_init, double tol,
                        std::size_t max_iters, std::optional<double> A_norm = std::nullopt);

/// Plain proximal gradient with step 1/||A||^2 for a fixed number of iterations.
Vector ista_lasso(const LinOp& A, ConstSpan b, double lambda, ConstSpan x_init, std::size_t iters,
                  std::optional<double> A_norm = std::nullopt);

struct LassoPathOptions {
  std::size_t grid_size = 100;
  double lambda_min_ratio = 1e-3;
  double tol = 1e-8;
  std::size_t max_iters = 10000;
  const std::vector<Fold>* folds = nullptr;
  const HoldoutSet* holdout = nullptr;
  std::optional<double> A_norm;
};

struct LassoPath {
  Vector lambdas;  // strictly decreasing
  std::vector<Vector> solutions;
  Vector objective;
  std::vector<std::size_t> support;
  std::vector<std::size_t> inner_iters;
  Vector cv_mse;       // empty without folds
  Vector holdout_mse;  // empty without a holdout set
  std::size_t best_index = 0;  // argmin cv_mse, else argmin holdout_mse, else 0

  void write_csv(std::ostream& os) const;
};

/// lambda_k = lambda_max * ratio^(k/(G-1)), lambda_max = ||A* b||_inf, warm-started.
Vector lasso_grid(double lambda_max, std::size_t grid_size, double ratio);
LassoPath lasso_path(const LinOp& A, ConstSpan b, const LassoPathOptions& opts = {});

struct LandweberTrace {
  std::vector<Vector> x;  // x_0 .. x_iters
  std::vector<Vector> y;  // y_0 .. y_iters
};

/// x_{k+1} = x_k - gamma A*(A x_k - b) and the dual recursion
/// y_{k+1} = y_k - gamma (A A* y_k + b), both started at zero.
LandweberTrace landweber(const LinOp& A, ConstSpan b, double gamma, std::size_t iters,
                         std::optional<double> A_norm = std::nullopt);

/// argmin_x ||x||_1 + 1/(2 alpha) ||x||^2 - <v, x> = alpha soft(v, 1).
Vector linearized_bregman_x_update(ConstSpan v, double alpha);

/// Linearized Bregman iterations for ||x||_1 + 1/(2 alpha) ||x||^2 s.t. Ax = b:
/// v_{k+1} = v_k - h A*(A x_k - b), x_{k+1} = alpha soft(v_{k+1}, 1).
/// h defaults to 1/(alpha ||A||^2). Returns x_0 .. x_iters.
std::vector<Vector> linearized_bregman(const LinOp& A, ConstSpan b, double alpha, std::size_t iters,
                                       std::optional<double> step = std::nullopt);

}  // namespace iterreg

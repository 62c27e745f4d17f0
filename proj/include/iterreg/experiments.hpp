#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iterreg/baselines.hpp"
#include "iterreg/datagen.hpp"
#include "iterreg/pdsolver.hpp"

// Figure protocols for the sparse-recovery and completion experiments.
// All curves are computed on the last iterates x_k.
namespace iterreg::experiments {

struct Curve {
  std::string label;
  MetricsLog log;
};

/// sigma tau ||A||^2 = 0.99 with sigma = ratio * tau.
StepSizes steps_with_ratio(double A_norm, double ratio);

/// Fixes the row split of a sparse instance into a training part and a test part.
struct SplitInstance {
  SparseInstance train;
  Matrix A_test;
  Vector b_test;
};

/// sparse_instance(n + n_test, ...) with the last n_test rows held out.
SplitInstance split_instance(std::size_t n, std::size_t n_test, std::size_t d, double rho, double sparsity_frac,
                             double snr, std::uint64_t seed);

/// Multiplies each column by an independent U(lo, hi) factor, then recomputes
/// b* = A x_bar and redraws the noise to keep the SNR exact.
SparseInstance scale_columns(const SparseInstance& inst, double lo, double hi, std::uint64_t seed);

ProblemSpec l1_problem(const SparseInstance& inst);

struct Fig3Options {
  std::size_t n = 200, d = 500;
  double rho = 0.2, sparsity = 0.1, snr = 10.0;
  std::size_t iters = 200;
  std::uint64_t seed = 0;
};

/// Four curves: sigma = tau, tau/100, 1/||A* b||_inf, tau/10000.
std::vector<Curve> fig3(const Fig3Options& o);

struct Fig4Options {
  std::size_t n = 1000, d = 2000, n_test = 250;
  double rho = 0.2, sparsity = 0.1, snr = 5.0;
  std::size_t pd_iters = 300;
  std::size_t grid_size = 50;
  double lambda_min_ratio = 1e-2;
  double lasso_tol = 1e-6;
  std::size_t lasso_max_iters = 5000;
  std::size_t folds = 0;  // >= 2: select by cross validation on the training rows
  bool lasso_cv = true;   // false: the Lasso keeps the holdout argmin even with folds
  std::uint64_t seed = 0;
};

struct Fig4Result {
  MetricsLog pd;  // holdout_mse and f1 per iteration
  Vector pd_cv_mse;  // empty without folds
  LassoPath lasso;
  Vector lasso_f1;
  std::size_t pd_best_k = 0;             // selected iteration
  double pd_best_mse = 0.0, lasso_best_mse = 0.0;  // held-out MSE of the selected models
  double pd_best_f1 = 0.0, lasso_best_f1 = 0.0;    // largest F1 along each path
};

/// Datadriven primal-dual run against a warm-started Lasso path. Models are
/// selected on the held-out rows, or by cross validation when folds >= 2.
Fig4Result fig4(const Fig4Options& o);

struct Fig5Options {
  std::size_t n = 500, d = 1000;
  double rho = 0.2, sparsity = 0.1, snr = 5.0;
  double scale_lo = 1.0, scale_hi = 5.0;
  std::size_t iters = 300;
  bool inverse_columns = true;
  std::uint64_t seed = 0;
};

struct Fig5Result {
  Curve scalar, diagonal;
  double best_f1_scalar = 0.0, best_f1_diagonal = 0.0;
};

/// Scalar datadriven steps against the diagonal preconditioner with Sigma = (d/theta) Id,
/// theta chosen so that the dual step equals the datadriven sigma.
Fig5Result fig5(const Fig5Options& o);

struct Fig6Options {
  std::size_t d = 200, r = 5;
  double hidden = 0.8;
  std::vector<double> deltas{0.1, 0.5, 1.0};
  std::size_t iters = 1000;
  bool with_noisy = true;  // second pass for dist_noisy
  std::uint64_t seed = 0;
};

struct Fig6Curve {
  double delta = 0.0;
  Vector dist_star;   // ||X_k - B*||_F, entry k-1 is iteration k
  Vector dist_noisy;  // ||X_k - X_final||_F, the final iterate standing in for the noisy solution
};

/// Nuclear-norm completion with sigma = tau = 0.99.
std::vector<Fig6Curve> fig6(const Fig6Options& o);

/// Largest F1 over a log, and the first iteration reaching it.
std::pair<double, std::size_t> best_f1(const MetricsLog& log);

}  // namespace iterreg::experiments

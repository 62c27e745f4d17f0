#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "iterreg/problem.hpp"

namespace iterreg {

struct SolverConfig {
  DiagMetric T;      // primal preconditioner
  DiagMetric Sigma;  // dual preconditioner
  double xi = 0.25;
  double eta = 1.5;
  ProxErrorSchedule schedule;
  bool averaging = true;
  std::size_t max_iters = 1000;
  // Metrics every log_every iterations; 0 means every iteration up to 1000, then every 10.
  std::size_t log_every = 0;
  bool strict = false;
  enum class MetricsOn { averaged, last };
  MetricsOn metrics_on = MetricsOn::averaged;
  std::uint64_t seed = 0;
  Vector x0;  // empty means zero
  Vector y0;  // empty means zero; also used for y_{-1}
};

struct SolverState {
  Vector x, y, y_prev;
  Vector ax;  // A x_k, kept to avoid a second product for the residual
  std::size_t k = 0;
  Vector x_sum, y_sum, ax_sum;
  double last_epsilon = 0.0;
  std::size_t fallbacks = 0;

  Vector x_avg() const;
  Vector y_avg() const;
  Vector ax_avg() const;
};

struct ParamConstants {
  double omega = 0.0;
  double theta = 0.0;
  double rho = 0.0;
};

/// omega = 1 - tau_M (L + sigma_M ||A||^2), theta = xi - tau_M (xi L + sigma_M ||A||^2),
/// rho = sigma_m (eta - 1) - sigma_M xi eta.
/// Throws ConfigError when omega < 0, StrictConfigError when strict and theta < 0 or rho <= 0.
ParamConstants validate_params(double A_norm, double L, const DiagMetric& T, const DiagMetric& Sigma, double xi,
                               double eta, bool strict);

struct StepSizes {
  double sigma = 0.0;
  double tau = 0.0;
  bool degenerate = false;
};

/// sigma = 1/||A* b||_inf and tau = 0.99/(sigma ||A||^2).
StepSizes datadriven_sigma(const LinOp& A, ConstSpan b_delta, double A_norm);

struct PrecondOptions {
  bool inverse_columns = false;
  bool auto_scale = false;
  bool check = true;  // raise StrictConfigError when tau_M sigma_M ||A||^2 > 1
  std::optional<double> A_norm;
};

struct Preconditioners {
  DiagMetric T;
  DiagMetric Sigma;
};

/// T = theta diag(||A_:j||^2) (or its inverse with inverse_columns) and
/// Sigma = (d/theta) Id. Checks tau_M sigma_M <= 1/||A||^2;
/// with auto_scale, T is rescaled so that tau_M sigma_M ||A||^2 = 0.99.
Preconditioners pock_chambolle_precond(const Matrix& A, double theta, const PrecondOptions& opts = {});

SolverState initial_state(const ProblemSpec& problem, const SolverConfig& config);

/// One iteration: y~ = 2 y_k - y_{k-1}; x_{k+1} = prox(x_k - T grad F(x_k) - T A* y~);
/// y_{k+1} = y_k + Sigma (A x_{k+1} - b).
SolverState pd_step(const ProblemSpec& problem, const SolverConfig& config, SolverState state, std::mt19937_64& rng);

/// y + Sigma(Ax - b) written as the prox of <b, .> in the Sigma^{-1} metric.
Vector dual_update_prox_form(ConstSpan y, const DiagMetric& Sigma, ConstSpan Ax, ConstSpan b);

struct MetricsRow {
  std::size_t k = 0;
  std::optional<double> feasibility;
  std::optional<double> lagrangian_gap;
  std::optional<double> bregman_l1;
  std::optional<double> l1_norm;
  std::optional<std::size_t> support_size;
  std::optional<double> f1;
  std::optional<double> holdout_mse;
  std::optional<double> epsilon_k;
  double elapsed_ms = 0.0;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;
  static const char* csv_header();
  void write_csv(std::ostream& os) const;
};

namespace stopping {
struct MaxIters {};
struct FixedK {
  double ctilde;
  double delta;
};
struct HoldoutCv {
  std::size_t patience = 0;  // 0: never stop early
};
}  // namespace stopping

using StoppingRule = std::variant<stopping::MaxIters, stopping::FixedK, stopping::HoldoutCv>;

/// Iteration count at which the fixed_k rule stops.
std::size_t fixed_k_iterations(double ctilde, double delta);

struct RunResult {
  SolverState state;
  MetricsLog log;
  ParamConstants params;
  double A_norm = 0.0;
  std::size_t stopped_at = 0;
  std::optional<std::size_t> best_k;  // holdout argmin when a holdout set is given
  Vector best_x;
  Vector epsilons;
  std::size_t fallbacks = 0;
};

using StepCallback = std::function<void(const SolverState&)>;

RunResult run(const ProblemSpec& problem, const SolverConfig& config, const StoppingRule& rule = stopping::MaxIters{},
              const StepCallback& callback = {});

/// Metrics of one iterate (x, with A x given) against whatever ground truth the problem carries.
MetricsRow evaluate_metrics(const ProblemSpec& problem, ConstSpan x, ConstSpan Ax, std::size_t k);

struct Fold {
  ProblemSpec train;
  LinOpPtr A_heldout;
  Vector b_heldout;
};

/// Contiguous folds over a (seeded) permutation of the rows.
std::vector<Fold> make_folds(const ProblemSpec& problem, std::size_t n_folds, std::uint64_t seed);

struct CvResult {
  std::size_t best_k = 0;
  Vector mean_mse;                  // entry k-1 is iteration k
  std::vector<Vector> fold_mse;
};

/// Runs every fold for max_iters iterations and returns the argmin of the
/// fold-averaged heldout MSE (smallest k on ties). Folds run in parallel.
CvResult cv_early_stop(const std::vector<Fold>& folds,
                       const std::function<SolverConfig(const ProblemSpec&)>& make_config, std::size_t max_iters);

}  // namespace iterreg

#include "iterreg/pdsolver.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "iterreg/diagnostics.hpp"
#include "iterreg/errors.hpp"
#include "iterreg/log.hpp"

namespace iterreg {

SmoothTerm quadratic_term(double weight) {
  SmoothTerm F;
  F.grad = [weight](ConstSpan x) { return scaled(weight, x); };
  F.value = [weight](ConstSpan x) { return 0.5 * weight * sq_norm(x); };
  F.L = std::abs(weight);
  return F;
}

double ProblemSpec::operator_norm() const {
  if (A_norm) return *A_norm;
  return iterreg::operator_norm(*A);
}

namespace {

Vector averaged(const Vector& sum, std::size_t k, const Vector& fallback) {
  if (k == 0) return fallback;
  return scaled(1.0 / static_cast<double>(k), sum);
}

}  // namespace

Vector SolverState::x_avg() const { return averaged(x_sum, k, x); }
Vector SolverState::y_avg() const { return averaged(y_sum, k, y); }
Vector SolverState::ax_avg() const { return averaged(ax_sum, k, ax); }

ParamConstants validate_params(double A_norm, double L, const DiagMetric& T, const DiagMetric& Sigma, double xi,
                               double eta, bool strict) {
  if (!(A_norm >= 0.0) || !(L >= 0.0)) throw ConfigError("validate_params: ||A|| and L must be nonnegative");
  if (!(xi > 0.0 && xi < 1.0)) throw ConfigError("validate_params: xi must lie in (0, 1)");
  if (!(eta > 1.0)) throw ConfigError("validate_params: eta must exceed 1");
  const double a2 = A_norm * A_norm;
  ParamConstants c;
  c.omega = 1.0 - T.tau_max() * (L + Sigma.tau_max() * a2);
  c.theta = xi - T.tau_max() * (xi * L + Sigma.tau_max() * a2);
  c.rho = Sigma.tau_min() * (eta - 1.0) - Sigma.tau_max() * xi * eta;
  // rounding slack so that tau sigma ||A||^2 = 1 constructed in floating point passes
  if (c.omega < -1e-12) throw ConfigError("step sizes too large: omega = " + std::to_string(c.omega) + " < 0");
  if (strict && (c.theta < -1e-12 || !(c.rho > 0.0)))
    throw StrictConfigError("strict step-size conditions fail: theta = " + std::to_string(c.theta) +
                            ", rho = " + std::to_string(c.rho));
  return c;
}

StepSizes datadriven_sigma(const LinOp& A, ConstSpan b_delta, double A_norm) {
  if (!(A_norm > 0.0)) throw ConfigError("datadriven_sigma: ||A|| must be positive");
  const double m = norm_inf(A.adjoint(b_delta));
  StepSizes s;
  if (m == 0.0) {
    log::warn("datadriven_sigma: A* b is zero; falling back to sigma = tau = 0.99/||A||");
    s.sigma = s.tau = 0.99 / A_norm;
    s.degenerate = true;
    return s;
  }
  s.sigma = 1.0 / m;
  s.tau = 0.99 / (s.sigma * A_norm * A_norm);
  return s;
}

Preconditioners pock_chambolle_precond(const Matrix& A, double theta, const PrecondOptions& opts) {
  if (!(theta > 0.0)) throw ConfigError("pock_chambolle_precond: theta must be positive");
  const std::size_t n = A.rows(), d = A.cols();
  Vector colsq(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) colsq[j] += A(i, j) * A(i, j);
  Vector t(d), s(n);
  for (std::size_t j = 0; j < d; ++j) {
    if (colsq[j] == 0.0) throw ConfigError("pock_chambolle_precond: column " + std::to_string(j) + " is zero");
    t[j] = opts.inverse_columns ? theta / colsq[j] : theta * colsq[j];
  }
  // (1/theta) ||A_i:||_0 collapses to d/theta for the dense designs this is built for
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<double>(d) / theta;
  const double A_norm = opts.A_norm ? *opts.A_norm : operator_norm(DenseOp(A));
  const double a2 = A_norm * A_norm;
  double prod = *std::max_element(t.begin(), t.end()) * *std::max_element(s.begin(), s.end()) * a2;
  if (opts.auto_scale) {
    const double f = 0.99 / prod;
    for (double& e : t) e *= f;
    prod = 0.99;
  }
  if (opts.check && prod > 1.0 + 1e-12)
    throw StrictConfigError("pock_chambolle_precond: tau_M sigma_M ||A||^2 = " + std::to_string(prod) + " > 1");
  return {DiagMetric(std::move(t)), DiagMetric(std::move(s))};
}

SolverState initial_state(const ProblemSpec& problem, const SolverConfig& config) {
  const std::size_t d = problem.A->in_dim(), n = problem.A->out_dim();
  SolverState s;
  s.x = config.x0.empty() ? Vector(d, 0.0) : config.x0;
  s.y = config.y0.empty() ? Vector(n, 0.0) : config.y0;
  if (s.x.size() != d || s.y.size() != n) throw ConfigError("initial point has the wrong dimension");
  s.y_prev = s.y;
  s.ax = problem.A->apply(s.x);
  s.x_sum.assign(d, 0.0);
  s.y_sum.assign(n, 0.0);
  s.ax_sum.assign(n, 0.0);
  return s;
}

SolverState pd_step(const ProblemSpec& problem, const SolverConfig& config, SolverState state, std::mt19937_64& rng) {
  const LinOp& A = *problem.A;
  const std::size_t d = A.in_dim(), n = A.out_dim();
  const DiagMetric& T = config.T;
  const DiagMetric& S = config.Sigma;

  Vector ytil(n);
  for (std::size_t i = 0; i < n; ++i) ytil[i] = 2.0 * state.y[i] - state.y_prev[i];
  Vector v(d);
  A.adjoint_to(ytil, v);
  if (problem.F) {
    const Vector g = problem.F->grad(state.x);
    for (std::size_t j = 0; j < d; ++j) v[j] = state.x[j] - T[j] * (g[j] + v[j]);
  } else {
    for (std::size_t j = 0; j < d; ++j) v[j] = state.x[j] - T[j] * v[j];
  }

  InexactProxResult px = inexact_prox(*problem.R, v, T, config.schedule, state.k + 1, rng);
  state.x = std::move(px.x);
  state.last_epsilon = px.epsilon;
  state.fallbacks += px.fell_back;

  A.apply_to(state.x, state.ax);
  std::swap(state.y_prev, state.y);  // y_prev <- y_k
  for (std::size_t i = 0; i < n; ++i) state.y[i] = state.y_prev[i] + S[i] * (state.ax[i] - problem.b_delta[i]);
  ++state.k;

  if (!all_finite(state.x) || !all_finite(state.y))
    throw NumericalError("non-finite iterate", state.k);

  axpy(1.0, state.x, state.x_sum);
  axpy(1.0, state.y, state.y_sum);
  axpy(1.0, state.ax, state.ax_sum);
  return state;
}

Vector dual_update_prox_form(ConstSpan y, const DiagMetric& Sigma, ConstSpan Ax, ConstSpan b) {
  // prox of <b, .> in the metric Sigma^{-1} is w -> w - Sigma b
  Vector w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = y[i] + Sigma[i] * Ax[i];
  for (std::size_t i = 0; i < y.size(); ++i) w[i] -= Sigma[i] * b[i];
  return w;
}

const char* MetricsLog::csv_header() {
  return "k,feasibility,lagrangian_gap,bregman_l1,l1_norm,support_size,f1,holdout_mse,epsilon_k,elapsed_ms";
}

void MetricsLog::write_csv(std::ostream& os) const {
  os << csv_header() << '\n';
  char buf[64];
  auto put = [&](const std::optional<double>& v) {
    os << ',';
    if (v) {
      std::snprintf(buf, sizeof buf, "%.17g", *v);
      os << buf;
    }
  };
  for (const auto& r : rows) {
    os << r.k;
    put(r.feasibility);
    put(r.lagrangian_gap);
    put(r.bregman_l1);
    put(r.l1_norm);
    os << ',';
    if (r.support_size) os << *r.support_size;
    put(r.f1);
    put(r.holdout_mse);
    put(r.epsilon_k);
    std::snprintf(buf, sizeof buf, "%.3f", r.elapsed_ms);
    os << ',' << buf << '\n';
  }
}

std::size_t fixed_k_iterations(double ctilde, double delta) {
  if (!(delta > 0.0)) throw ConfigError("fixed_k stopping needs delta > 0");
  if (!(ctilde > 0.0)) throw ConfigError("fixed_k stopping needs ctilde > 0");
  const double q = ctilde / delta;
  // C/delta computed in floating point can land a hair above an integer
  const double k = std::ceil(q * (1.0 - 1e-12));
  return static_cast<std::size_t>(std::max(1.0, k));
}

MetricsRow evaluate_metrics(const ProblemSpec& problem, ConstSpan x, ConstSpan Ax, std::size_t k) {
  MetricsRow row;
  row.k = k;
  const Vector* bref = &problem.b_delta;
  if (problem.cert)
    bref = &problem.cert->b_star;
  else if (problem.b_star)
    bref = &*problem.b_star;
  row.feasibility = norm2(sub(Ax, *bref));

  const bool is_l1 = problem.R->kind() == RegKind::l1;
  if (is_l1) {
    row.l1_norm = norm1(x);
    row.support_size = support_size(x);
  }
  if (problem.cert) {
    const auto& c = *problem.cert;
    const double r = dot(c.y_star, sub(Ax, c.b_star));
    const double fx = problem.F ? problem.F->value(x) - problem.F->value(c.x_star) : 0.0;
    row.lagrangian_gap = problem.R->value(x) - problem.R->value(c.x_star) + fx + r;
  }
  const Vector* xt = problem.x_true ? &*problem.x_true : problem.cert ? &problem.cert->x_star : nullptr;
  if (xt && is_l1) row.f1 = f1_support(x, *xt);
  if (problem.holdout) {
    const auto& h = *problem.holdout;
    const double bn = sq_norm(h.b);
    row.holdout_mse = sq_norm(sub(h.A->apply(x), h.b)) / (bn > 0.0 ? bn : 1.0);
  }
  return row;
}

RunResult run(const ProblemSpec& problem, const SolverConfig& config, const StoppingRule& rule,
              const StepCallback& callback) {
  if (!problem.A || !problem.R) throw ConfigError("problem needs an operator and a regularizer");
  const std::size_t d = problem.A->in_dim(), n = problem.A->out_dim();
  if (problem.b_delta.size() != n) throw ConfigError("b_delta has the wrong length");
  if (config.T.size() != d || config.Sigma.size() != n)
    throw ConfigError("preconditioner sizes do not match the operator");

  RunResult res;
  res.A_norm = problem.operator_norm();
  res.params = validate_params(res.A_norm, problem.F ? problem.F->L : 0.0, config.T, config.Sigma, config.xi,
                               config.eta, config.strict);

  std::size_t iters = config.max_iters;
  std::size_t patience = 0;
  bool want_holdout = false;
  if (auto* fk = std::get_if<stopping::FixedK>(&rule)) iters = fixed_k_iterations(fk->ctilde, fk->delta);
  if (auto* hc = std::get_if<stopping::HoldoutCv>(&rule)) {
    if (!problem.holdout) throw ConfigError("holdout stopping rule needs a holdout set");
    patience = hc->patience;
    want_holdout = true;
  }
  want_holdout = want_holdout || problem.holdout.has_value();

  std::mt19937_64 rng(config.seed);
  SolverState state = initial_state(problem, config);
  const auto t0 = std::chrono::steady_clock::now();
  const bool use_avg = config.averaging && config.metrics_on == SolverConfig::MetricsOn::averaged;

  double best_mse = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t it = 0; it < iters; ++it) {
    state = pd_step(problem, config, std::move(state), rng);
    res.epsilons.push_back(state.last_epsilon);
    if (callback) callback(state);

    const std::size_t k = state.k;
    const std::size_t every = config.log_every ? config.log_every : (k <= 1000 ? 1 : 10);
    // holdout tracking needs every iteration
    const bool log_now = k % every == 0 || it + 1 == iters;
    if (log_now || want_holdout) {
      const Vector x = use_avg ? state.x_avg() : state.x;
      const Vector ax = use_avg ? state.ax_avg() : state.ax;
      MetricsRow row = evaluate_metrics(problem, x, ax, k);
      row.epsilon_k = state.last_epsilon;
      row.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      if (row.holdout_mse) {
        if (*row.holdout_mse < best_mse) {
          best_mse = *row.holdout_mse;
          res.best_k = k;
          res.best_x = x;
          since_best = 0;
        } else {
          ++since_best;
        }
      }
      if (log_now) res.log.rows.push_back(std::move(row));
      if (patience > 0 && since_best >= patience) break;
    }
  }
  res.stopped_at = state.k;
  res.fallbacks = state.fallbacks;
  res.state = std::move(state);
  return res;
}

std::vector<Fold> make_folds(const ProblemSpec& problem, std::size_t n_folds, std::uint64_t seed) {
  const std::size_t n = problem.A->out_dim();
  if (n_folds < 2) throw ConfigError("make_folds: need at least 2 folds");
  if (n_folds > n) throw ConfigError("make_folds: more folds than rows");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  const auto* dense = dynamic_cast<const DenseOp*>(problem.A.get());
  auto select = [&](const std::vector<std::size_t>& rows) -> LinOpPtr {
    if (dense) {
      const Matrix& M = dense->matrix();
      Matrix out(rows.size(), M.cols());
      for (std::size_t i = 0; i < rows.size(); ++i) std::copy(M.row(rows[i]).begin(), M.row(rows[i]).end(), out.row(i).begin());
      return std::make_shared<DenseOp>(std::move(out));
    }
    return std::make_shared<RowSelectOp>(problem.A, rows);
  };

  std::vector<Fold> folds;
  for (std::size_t f = 0; f < n_folds; ++f) {
    const std::size_t lo = f * n / n_folds, hi = (f + 1) * n / n_folds;
    std::vector<std::size_t> ho(perm.begin() + lo, perm.begin() + hi), tr;
    tr.insert(tr.end(), perm.begin(), perm.begin() + lo);
    tr.insert(tr.end(), perm.begin() + hi, perm.end());
    std::sort(ho.begin(), ho.end());
    std::sort(tr.begin(), tr.end());
    Fold fold;
    fold.train.A = select(tr);
    fold.train.R = problem.R;
    fold.train.F = problem.F;
    fold.train.x_true = problem.x_true;
    for (std::size_t i : tr) fold.train.b_delta.push_back(problem.b_delta[i]);
    fold.A_heldout = select(ho);
    for (std::size_t i : ho) fold.b_heldout.push_back(problem.b_delta[i]);
    folds.push_back(std::move(fold));
  }
  return folds;
}

CvResult cv_early_stop(const std::vector<Fold>& folds,
                       const std::function<SolverConfig(const ProblemSpec&)>& make_config, std::size_t max_iters) {
  if (folds.size() < 2) throw ConfigError("cv_early_stop: need at least 2 folds");
  if (max_iters == 0) throw ConfigError("cv_early_stop: max_iters must be positive");
  for (const auto& f : folds)
    if (f.b_heldout.empty() || !f.A_heldout) throw ConfigError("cv_early_stop: empty heldout fold");

  CvResult res;
  res.fold_mse.assign(folds.size(), Vector(max_iters, 0.0));
  const std::ptrdiff_t nf = static_cast<std::ptrdiff_t>(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t f = 0; f < nf; ++f) {
    try {
      ProblemSpec p = folds[f].train;
      p.holdout = HoldoutSet{folds[f].A_heldout, folds[f].b_heldout};
      SolverConfig cfg = make_config(p);
      cfg.max_iters = max_iters;
      cfg.log_every = 1;
      RunResult r = run(p, cfg);
      for (std::size_t k = 0; k < r.log.rows.size() && k < max_iters; ++k)
        res.fold_mse[f][k] = r.log.rows[k].holdout_mse.value_or(0.0);
    } catch (...) {
      errors[f] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  res.mean_mse.assign(max_iters, 0.0);
  for (const auto& curve : res.fold_mse)
    for (std::size_t k = 0; k < max_iters; ++k) res.mean_mse[k] += curve[k] / static_cast<double>(folds.size());
  // min_element keeps the first minimum, i.e. the smallest k
  res.best_k = static_cast<std::size_t>(std::min_element(res.mean_mse.begin(), res.mean_mse.end()) -
                                        res.mean_mse.begin()) + 1;
  return res;
}

}  // namespace iterreg

#include "iterreg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "iterreg/diagnostics.hpp"
#include "iterreg/errors.hpp"

namespace iterreg::experiments {

StepSizes steps_with_ratio(double A_norm, double ratio) {
  StepSizes s;
  s.tau = std::sqrt(0.99 / ratio) / A_norm;
  s.sigma = ratio * s.tau;
  return s;
}

SplitInstance split_instance(std::size_t n, std::size_t n_test, std::size_t d, double rho, double sparsity_frac,
                             double snr, std::uint64_t seed) {
  const SparseInstance full = sparse_instance(n + n_test, d, rho, sparsity_frac, snr, seed);
  SplitInstance s;
  SparseInstance& tr = s.train;
  tr.A = Matrix(n, d);
  s.A_test = Matrix(n_test, d);
  for (std::size_t i = 0; i < n + n_test; ++i) {
    const auto row = full.A.row(i);
    if (i < n) {
      std::copy(row.begin(), row.end(), tr.A.row(i).begin());
      tr.b_star.push_back(full.b_star[i]);
      tr.b_delta.push_back(full.b_delta[i]);
    } else {
      std::copy(row.begin(), row.end(), s.A_test.row(i - n).begin());
      s.b_test.push_back(full.b_delta[i]);
    }
  }
  tr.x_bar = full.x_bar;
  tr.delta = norm2(sub(tr.b_delta, tr.b_star));
  tr.snr = full.snr;
  tr.seed = seed;
  return s;
}

SparseInstance scale_columns(const SparseInstance& inst, double lo, double hi, std::uint64_t seed) {
  SparseInstance out = inst;
  std::mt19937_64 rng(seed ^ 0x5ca1ab1eULL);
  std::uniform_real_distribution<double> u(lo, hi);
  for (std::size_t j = 0; j < out.A.cols(); ++j) {
    const double c = u(rng);
    for (std::size_t i = 0; i < out.A.rows(); ++i) out.A(i, j) *= c;
  }
  out.b_star = DenseOp(out.A).apply(out.x_bar);
  if (std::isfinite(inst.snr)) {
    out.b_delta = add_noise(out.b_star, norm2(out.b_star) / inst.snr, seed ^ 0x0dd5eedULL);
    out.delta = norm2(sub(out.b_delta, out.b_star));
  } else {
    out.b_delta = out.b_star;
    out.delta = 0.0;
  }
  return out;
}

ProblemSpec l1_problem(const SparseInstance& inst) {
  ProblemSpec p;
  p.A = std::make_shared<DenseOp>(inst.A);
  p.b_delta = inst.b_delta;
  p.R = l1();
  p.b_star = inst.b_star;
  p.x_true = inst.x_bar;
  p.delta = inst.delta;
  return p;
}

namespace {

SolverConfig last_iterate_config(std::size_t d, std::size_t n, double tau, double sigma, std::size_t iters) {
  SolverConfig c;
  c.T = DiagMetric::scalar(d, tau);
  c.Sigma = DiagMetric::scalar(n, sigma);
  c.max_iters = iters;
  c.log_every = 1;
  c.metrics_on = SolverConfig::MetricsOn::last;
  return c;
}

}  // namespace

std::pair<double, std::size_t> best_f1(const MetricsLog& log) {
  double best = -1.0;
  std::size_t at = 0;
  for (const auto& r : log.rows)
    if (r.f1 && *r.f1 > best) {
      best = *r.f1;
      at = r.k;
    }
  return {std::max(best, 0.0), at};
}

std::vector<Curve> fig3(const Fig3Options& o) {
  const SparseInstance inst = sparse_instance(o.n, o.d, o.rho, o.sparsity, o.snr, o.seed);
  ProblemSpec p = l1_problem(inst);
  const double nA = p.operator_norm();
  p.A_norm = nA;
  const StepSizes dd = datadriven_sigma(*p.A, p.b_delta, nA);

  struct Choice {
    const char* label;
    StepSizes s;
  };
  const std::vector<Choice> choices{{"sigma_tau", steps_with_ratio(nA, 1.0)},
                                    {"sigma_tau_100", steps_with_ratio(nA, 1e-2)},
                                    {"sigma_datadriven", dd},
                                    {"sigma_tau_10000", steps_with_ratio(nA, 1e-4)}};
  std::vector<Curve> out;
  for (const auto& c : choices) {
    const SolverConfig cfg = last_iterate_config(o.d, o.n, c.s.tau, c.s.sigma, o.iters);
    out.push_back({c.label, run(p, cfg).log});
  }
  return out;
}

Fig4Result fig4(const Fig4Options& o) {
  const SplitInstance s = split_instance(o.n, o.n_test, o.d, o.rho, o.sparsity, o.snr, o.seed);
  ProblemSpec p = l1_problem(s.train);
  const double nA = p.operator_norm();
  p.A_norm = nA;
  HoldoutSet ho{std::make_shared<DenseOp>(s.A_test), s.b_test};
  p.holdout = ho;
  const bool cv = o.folds >= 2;
  std::vector<Fold> folds;
  if (cv) folds = make_folds(p, o.folds, o.seed);

  Fig4Result res;
  const StepSizes dd = datadriven_sigma(*p.A, p.b_delta, nA);
  const RunResult r = run(p, last_iterate_config(o.d, o.n, dd.tau, dd.sigma, o.pd_iters));
  res.pd = r.log;
  res.pd_best_f1 = best_f1(r.log).first;
  if (cv) {
    const CvResult c = cv_early_stop(
        folds,
        [](const ProblemSpec& f) {
          const StepSizes st = datadriven_sigma(*f.A, f.b_delta, f.operator_norm());
          return last_iterate_config(f.A->in_dim(), f.A->out_dim(), st.tau, st.sigma, 0);
        },
        o.pd_iters);
    res.pd_cv_mse = c.mean_mse;
    res.pd_best_k = c.best_k;
  } else {
    res.pd_best_k = r.best_k.value_or(1);
  }
  for (const auto& row : r.log.rows)
    if (row.k == res.pd_best_k) res.pd_best_mse = *row.holdout_mse;

  LassoPathOptions lo;
  lo.grid_size = o.grid_size;
  lo.lambda_min_ratio = o.lambda_min_ratio;
  lo.tol = o.lasso_tol;
  lo.max_iters = o.lasso_max_iters;
  lo.holdout = &ho;
  lo.A_norm = nA;
  if (cv && o.lasso_cv) lo.folds = &folds;
  res.lasso = lasso_path(*p.A, p.b_delta, lo);
  res.lasso_best_mse = res.lasso.holdout_mse[res.lasso.best_index];
  for (const auto& x : res.lasso.solutions) res.lasso_f1.push_back(f1_support(x, s.train.x_bar));
  res.lasso_best_f1 = *std::max_element(res.lasso_f1.begin(), res.lasso_f1.end());
  return res;
}

Fig5Result fig5(const Fig5Options& o) {
  const SparseInstance base = sparse_instance(o.n, o.d, o.rho, o.sparsity, o.snr, o.seed);
  const SparseInstance inst = scale_columns(base, o.scale_lo, o.scale_hi, o.seed);
  ProblemSpec p = l1_problem(inst);
  const double nA = p.operator_norm();
  p.A_norm = nA;
  const StepSizes dd = datadriven_sigma(*p.A, p.b_delta, nA);

  Fig5Result res;
  SolverConfig sc = last_iterate_config(o.d, o.n, dd.tau, dd.sigma, o.iters);
  res.scalar = {"scalar", run(p, sc).log};

  // Sigma = (d/theta) Id equals the datadriven sigma for theta = d ||A* b||_inf
  const double theta = static_cast<double>(o.d) / dd.sigma;
  PrecondOptions po;
  po.inverse_columns = o.inverse_columns;
  po.auto_scale = true;
  po.A_norm = nA;
  const Preconditioners pc = pock_chambolle_precond(inst.A, theta, po);
  SolverConfig dc = sc;
  dc.T = pc.T;
  dc.Sigma = pc.Sigma;
  res.diagonal = {"diagonal", run(p, dc).log};

  res.best_f1_scalar = best_f1(res.scalar.log).first;
  res.best_f1_diagonal = best_f1(res.diagonal.log).first;
  return res;
}

std::vector<Fig6Curve> fig6(const Fig6Options& o) {
  std::vector<Fig6Curve> out;
  for (std::size_t t = 0; t < o.deltas.size(); ++t) {
    const double delta = o.deltas[t];
    // same B* and mask for every delta; only the noise changes
    const CompletionInstance ci = completion_instance(o.d, o.r, o.hidden, delta, o.seed);
    ProblemSpec p;
    p.A = ci.mask;
    p.A_norm = 1.0;
    p.b_delta = ci.B_delta.values();
    p.R = nuclear(o.d, o.d);
    SolverConfig c;
    c.T = DiagMetric::scalar(o.d * o.d, 0.99);
    c.Sigma = DiagMetric::scalar(o.d * o.d, 0.99);
    c.max_iters = o.iters;
    c.log_every = o.iters;

    Fig6Curve curve;
    curve.delta = delta;
    // the recursion is deterministic with exact prox, so a second pass replays
    // the iterates against the final one without storing them
    const Vector last = run(p, c, stopping::MaxIters{}, [&](const SolverState& s) {
                          curve.dist_star.push_back(norm2(sub(s.x, ci.B_star.values())));
                        }).state.x;
    if (o.with_noisy)
      run(p, c, stopping::MaxIters{}, [&](const SolverState& s) { curve.dist_noisy.push_back(norm2(sub(s.x, last))); });
    out.push_back(std::move(curve));
  }
  return out;
}

}  // namespace iterreg::experiments

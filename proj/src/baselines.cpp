#include "iterreg/baselines.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>

#include "iterreg/diagnostics.hpp"
#include "iterreg/errors.hpp"
#include "iterreg/log.hpp"

namespace iterreg {

namespace {

double lipschitz(const LinOp& A, std::optional<double> A_norm) {
  const double a = A_norm ? *A_norm : operator_norm(A);
  if (!(a > 0.0)) throw ConfigError("operator norm must be positive");
  return a * a;
}

// g = A*(A x - b), r = A x - b
void ls_gradient(const LinOp& A, ConstSpan b, ConstSpan x, Vector& r, Vector& g) {
  A.apply_to(x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  A.adjoint_to(r, g);
}

double kkt_from_gradient(ConstSpan g, ConstSpan x, double lambda) {
  double worst = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double v = x[j] != 0.0 ? std::abs(g[j] + lambda * sign(x[j])) : std::max(std::abs(g[j]) - lambda, 0.0);
    worst = std::max(worst, v);
  }
  return worst / lambda;
}

}  // namespace

double lasso_objective(const LinOp& A, ConstSpan b, double lambda, ConstSpan x) {
  return 0.5 * sq_norm(sub(A.apply(x), b)) + lambda * norm1(x);
}

double lasso_kkt_residual(const LinOp& A, ConstSpan b, double lambda, ConstSpan x) {
  Vector r(A.out_dim()), g(A.in_dim());
  ls_gradient(A, b, x, r, g);
  return kkt_from_gradient(g, x, lambda);
}

LassoResult fista_lasso(const LinOp& A, ConstSpan b, double lambda, ConstSpan x_init, double tol,
                        std::size_t max_iters, std::optional<double> A_norm) {
  if (!(lambda > 0.0)) throw ConfigError("fista_lasso: lambda must be positive");
  const std::size_t d = A.in_dim(), n = A.out_dim();
  LassoResult res;
  Vector r(n), g(d);

  if (lambda >= norm_inf(A.adjoint(b))) {
    res.x.assign(d, 0.0);
    return res;
  }
  const double L = lipschitz(A, A_norm);

  Vector x = x_init.empty() ? Vector(d, 0.0) : Vector(x_init.begin(), x_init.end());
  if (x.size() != d) throw ConfigError("fista_lasso: x_init has the wrong length");
  Vector yv = x, z(d), xprev(d);
  double fx = lasso_objective(A, b, lambda, x);
  double t = 1.0;

  for (std::size_t it = 0; it < max_iters; ++it) {
    // the residual costs two products, so it is checked every few steps
    if (it % 8 == 0) {
      ls_gradient(A, b, x, r, g);
      res.kkt = kkt_from_gradient(g, x, lambda);
      if (res.kkt <= tol) {
        res.x = std::move(x);
        res.iters = it;
        return res;
      }
    }
    ls_gradient(A, b, yv, r, g);
    for (std::size_t j = 0; j < d; ++j) z[j] = soft_threshold(yv[j] - g[j] / L, lambda / L);
    const double fz = lasso_objective(A, b, lambda, z);
    xprev = x;
    if (fz <= fx) {
      x = z;
      fx = fz;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t j = 0; j < d; ++j) yv[j] = x[j] + (t / tn) * (z[j] - x[j]) + ((t - 1.0) / tn) * (x[j] - xprev[j]);
    t = tn;
  }
  ls_gradient(A, b, x, r, g);
  res.kkt = kkt_from_gradient(g, x, lambda);
  res.iters = max_iters;
  res.hit_max_iters = res.kkt > tol;
  if (res.hit_max_iters) log::warn("fista_lasso: max_iters reached before the KKT tolerance");
  res.x = std::move(x);
  return res;
}

Vector ista_lasso(const LinOp& A, ConstSpan b, double lambda, ConstSpan x_init, std::size_t iters,
                  std::optional<double> A_norm) {
  if (!(lambda > 0.0)) throw ConfigError("ista_lasso: lambda must be positive");
  const std::size_t d = A.in_dim();
  const double L = lipschitz(A, A_norm);
  Vector x = x_init.empty() ? Vector(d, 0.0) : Vector(x_init.begin(), x_init.end());
  Vector r(A.out_dim()), g(d);
  for (std::size_t it = 0; it < iters; ++it) {
    ls_gradient(A, b, x, r, g);
    for (std::size_t j = 0; j < d; ++j) x[j] = soft_threshold(x[j] - g[j] / L, lambda / L);
  }
  return x;
}

Vector lasso_grid(double lambda_max, std::size_t grid_size, double ratio) {
  if (grid_size == 0) throw ConfigError("lasso_grid: grid_size must be positive");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("lasso_grid: ratio must lie in (0, 1)");
  if (!(lambda_max > 0.0)) throw ConfigError("lasso_grid: lambda_max must be positive");
  Vector grid(grid_size);
  for (std::size_t k = 0; k < grid_size; ++k)
    grid[k] = grid_size == 1 ? lambda_max
                             : lambda_max * std::pow(ratio, static_cast<double>(k) / static_cast<double>(grid_size - 1));
  return grid;
}

LassoPath lasso_path(const LinOp& A, ConstSpan b, const LassoPathOptions& opts) {
  LassoPath path;
  const double lmax = norm_inf(A.adjoint(b));
  path.lambdas = lasso_grid(lmax, opts.grid_size, opts.lambda_min_ratio);
  const double a_norm = opts.A_norm ? *opts.A_norm : operator_norm(A);

  Vector x(A.in_dim(), 0.0);
  for (double lam : path.lambdas) {
    LassoResult r = fista_lasso(A, b, lam, x, opts.tol, opts.max_iters, a_norm);
    x = r.x;
    path.objective.push_back(lasso_objective(A, b, lam, x));
    path.support.push_back(support_size(x, 0.0));
    path.inner_iters.push_back(r.iters);
    path.solutions.push_back(x);
  }

  if (opts.holdout) {
    const auto& h = *opts.holdout;
    const double bn = sq_norm(h.b);
    for (const auto& s : path.solutions) path.holdout_mse.push_back(sq_norm(sub(h.A->apply(s), h.b)) / bn);
    path.best_index = static_cast<std::size_t>(std::min_element(path.holdout_mse.begin(), path.holdout_mse.end()) -
                                               path.holdout_mse.begin());
  }

  if (opts.folds && !opts.folds->empty()) {
    const auto& folds = *opts.folds;
    path.cv_mse.assign(path.lambdas.size(), 0.0);
    for (const auto& f : folds) {
      const LinOp& At = *f.train.A;
      const double fa = operator_norm(At);
      const double bn = sq_norm(f.b_heldout);
      Vector xf(At.in_dim(), 0.0);
      for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
        xf = fista_lasso(At, f.train.b_delta, path.lambdas[k], xf, opts.tol, opts.max_iters, fa).x;
        path.cv_mse[k] += sq_norm(sub(f.A_heldout->apply(xf), f.b_heldout)) / bn / static_cast<double>(folds.size());
      }
    }
    path.best_index =
        static_cast<std::size_t>(std::min_element(path.cv_mse.begin(), path.cv_mse.end()) - path.cv_mse.begin());
  }
  return path;
}

void LassoPath::write_csv(std::ostream& os) const {
  os << "lambda,objective,support_size,cv_mse,holdout_mse\n";
  char buf[128];
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu,", lambdas[k], objective[k], support[k]);
    os << buf;
    if (!cv_mse.empty()) {
      std::snprintf(buf, sizeof buf, "%.17g", cv_mse[k]);
      os << buf;
    }
    os << ',';
    if (!holdout_mse.empty()) {
      std::snprintf(buf, sizeof buf, "%.17g", holdout_mse[k]);
      os << buf;
    }
    os << '\n';
  }
}

LandweberTrace landweber(const LinOp& A, ConstSpan b, double gamma, std::size_t iters, std::optional<double> A_norm) {
  const double a = A_norm ? *A_norm : operator_norm(A);
  if (!(gamma > 0.0) || gamma * a * a >= 2.0)
    throw ConfigError("landweber: gamma must lie in (0, 2/||A||^2)");
  const std::size_t d = A.in_dim(), n = A.out_dim();
  LandweberTrace tr;
  Vector x(d, 0.0), y(n, 0.0), r(n), g(d), aay(n);
  tr.x.push_back(x);
  tr.y.push_back(y);
  for (std::size_t k = 0; k < iters; ++k) {
    ls_gradient(A, b, x, r, g);
    axpy(-gamma, g, x);
    A.adjoint_to(y, g);
    A.apply_to(g, aay);
    for (std::size_t i = 0; i < n; ++i) y[i] -= gamma * (aay[i] + b[i]);
    tr.x.push_back(x);
    tr.y.push_back(y);
  }
  return tr;
}

Vector linearized_bregman_x_update(ConstSpan v, double alpha) {
  Vector x(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) x[i] = alpha * soft_threshold(v[i], 1.0);
  return x;
}

std::vector<Vector> linearized_bregman(const LinOp& A, ConstSpan b, double alpha, std::size_t iters,
                                       std::optional<double> step) {
  if (!(alpha > 0.0)) throw ConfigError("linearized_bregman: alpha must be positive");
  const double h = step ? *step : 1.0 / (alpha * lipschitz(A, std::nullopt));
  if (!(h > 0.0)) throw ConfigError("linearized_bregman: step must be positive");
  const std::size_t d = A.in_dim(), n = A.out_dim();
  Vector v(d, 0.0), x(d, 0.0), r(n), g(d);
  std::vector<Vector> trace{x};
  for (std::size_t k = 0; k < iters; ++k) {
    ls_gradient(A, b, x, r, g);
    axpy(-h, g, v);
    x = linearized_bregman_x_update(v, alpha);
    if (!(norm2(x) <= 1e12)) throw NumericalError("linearized_bregman: iterates blew up", k + 1);
    trace.push_back(x);
  }
  return trace;
}

}  // namespace iterreg

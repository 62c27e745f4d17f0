#include "iterreg/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "iterreg/errors.hpp"
#include "iterreg/pdsolver.hpp"

namespace iterreg {

namespace {

Vector smooth_grad(const ProblemSpec& p, ConstSpan x) {
  return p.F ? p.F->grad(x) : Vector(x.size(), 0.0);
}

double smooth_value(const ProblemSpec& p, ConstSpan x) { return p.F ? p.F->value(x) : 0.0; }

// Gram matrix restricted to rows S and columns S'.
Eigen::MatrixXd gram_block(const Eigen::MatrixXd& G, const std::vector<std::size_t>& S,
                           const std::vector<std::size_t>& Sp) {
  Eigen::MatrixXd B(S.size(), Sp.size());
  for (std::size_t i = 0; i < S.size(); ++i)
    for (std::size_t j = 0; j < Sp.size(); ++j) B(i, j) = G(S[i], Sp[j]);
  return B;
}

double isometry_defect(const Eigen::MatrixXd& G, const std::vector<std::size_t>& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_block(G, S, S), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(1.0 - ev(0), ev(ev.size() - 1) - 1.0);
}

double cross_norm(const Eigen::MatrixXd& G, const std::vector<std::size_t>& S, const std::vector<std::size_t>& Sp) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram_block(G, S, Sp));
  return svd.singularValues()(0);
}

// Calls f on every size-k subset of pool in lexicographic order.
template <class F>
void for_each_subset(const std::vector<std::size_t>& pool, std::size_t k, F&& f) {
  const std::size_t n = pool.size();
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<std::size_t> sub(k);
  while (true) {
    for (std::size_t i = 0; i < k; ++i) sub[i] = pool[idx[i]];
    f(sub);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

double optimality_residual(const ProblemSpec& problem, const SaddleCertificate& cert) {
  Vector g = problem.A->adjoint(cert.y_star);
  const Vector gf = smooth_grad(problem, cert.x_star);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -g[i] - gf[i];
  const double r = problem.R->value(cert.x_star) + problem.R->conjugate(g) - dot(g, cert.x_star);
  return std::isfinite(r) ? std::max(r, 0.0) : std::numeric_limits<double>::infinity();
}

void verify_certificate(const ProblemSpec& problem, const SaddleCertificate& cert) {
  const Vector r = sub(problem.A->apply(cert.x_star), cert.b_star);
  if (norm2(r) > 1e-8) throw CertificateError("certificate: A x* != b* (residual " + std::to_string(norm2(r)) + ")");
  const double f = optimality_residual(problem, cert);
  if (!(f <= 1e-6)) throw CertificateError("certificate: optimality inclusion fails (residual " + std::to_string(f) + ")");
}

double lagrangian_gap(const ProblemSpec& problem, const SaddleCertificate& cert, ConstSpan x) {
  const Vector r = sub(problem.A->apply(x), cert.b_star);
  return problem.R->value(x) + smooth_value(problem, x) - problem.R->value(cert.x_star) -
         smooth_value(problem, cert.x_star) + dot(cert.y_star, r);
}

double bregman_divergence(const ProblemSpec& problem, const SaddleCertificate& cert, ConstSpan x) {
  Vector g = problem.A->adjoint(cert.y_star);
  const Vector gf = smooth_grad(problem, cert.x_star);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = -g[i] - gf[i];
  const Vector dx = sub(x, cert.x_star);
  return problem.R->value(x) + smooth_value(problem, x) - problem.R->value(cert.x_star) -
         smooth_value(problem, cert.x_star) - dot(g, dx);
}

double bregman_l1(ConstSpan x, ConstSpan x_star, ConstSpan Aty_star) {
  if (x.size() != x_star.size() || x.size() != Aty_star.size()) throw ConfigError("bregman_l1: dimension mismatch");
  if (norm_inf(Aty_star) > 1.0 + 1e-6) throw CertificateError("bregman_l1: ||A* y*||_inf exceeds 1");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    s += std::abs(x[i]) - std::abs(x_star[i]) + Aty_star[i] * (x[i] - x_star[i]);
  return std::max(s, 0.0);
}

ExtendedSupportReport extended_support(ConstSpan Aty_star, double tol_sat) {
  ExtendedSupportReport rep;
  rep.magnitudes.resize(Aty_star.size());
  for (std::size_t i = 0; i < Aty_star.size(); ++i) {
    const double a = std::abs(Aty_star[i]);
    rep.magnitudes[i] = a;
    if (a >= 1.0 - tol_sat)
      rep.gamma.push_back(i);
    else
      rep.m = std::max(rep.m, a);
  }
  return rep;
}

CSConstants cs_constants(std::size_t s, double theta_s, double theta_ss, double theta_s2s, bool exact) {
  CSConstants c;
  c.s = s;
  c.theta_s = theta_s;
  c.theta_ss = theta_ss;
  c.theta_s2s = theta_s2s;
  c.exact = exact;
  const double denom = 1.0 - theta_s - theta_s2s;
  c.M = theta_ss / denom;
  c.Q = 1.0 / std::sqrt(1.0 - theta_s);
  c.W = std::sqrt(static_cast<double>(s)) * c.Q * c.M;
  if (denom <= 0.0 || theta_s >= 1.0) {
    c.M = std::numeric_limits<double>::infinity();
    c.W = std::numeric_limits<double>::infinity();
  }
  if (theta_s >= 1.0) c.Q = std::numeric_limits<double>::infinity();
  return c;
}

CSConstants estimate_rip_constants(const Matrix& A, std::size_t s, RipMode mode, std::size_t samples,
                                   std::uint64_t seed) {
  const std::size_t d = A.cols();
  if (s == 0) throw ConfigError("estimate_rip_constants: s must be positive");
  if (3 * s > d) throw ConfigError("estimate_rip_constants: need 3s <= d for disjoint supports");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Am(
      A.data(), static_cast<Eigen::Index>(A.rows()), static_cast<Eigen::Index>(d));
  const Eigen::MatrixXd G = Am.transpose() * Am;

  double ts = 0.0, tss = 0.0, ts2s = 0.0;
  if (mode == RipMode::exact) {
    if (d > 20 || s > 3) throw ConfigError("estimate_rip_constants: exact mode needs d <= 20 and s <= 3");
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), 0);
    for_each_subset(all, s, [&](const std::vector<std::size_t>& S) {
      ts = std::max(ts, isometry_defect(G, S));
      std::vector<std::size_t> rest;
      for (std::size_t j = 0; j < d; ++j)
        if (std::find(S.begin(), S.end(), j) == S.end()) rest.push_back(j);
      for_each_subset(rest, s, [&](const std::vector<std::size_t>& Sp) { tss = std::max(tss, cross_norm(G, S, Sp)); });
      for_each_subset(rest, 2 * s,
                      [&](const std::vector<std::size_t>& Sp) { ts2s = std::max(ts2s, cross_norm(G, S, Sp)); });
    });
    return cs_constants(s, ts, tss, ts2s, true);
  }

  if (samples == 0) throw ConfigError("estimate_rip_constants: montecarlo mode needs samples > 0");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t t = 0; t < samples; ++t) {
    // partial shuffle: first 3s entries form S, then S' of size 2s
    for (std::size_t i = 0; i < 3 * s; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, d - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    std::vector<std::size_t> S(perm.begin(), perm.begin() + s);
    std::vector<std::size_t> S1(perm.begin() + s, perm.begin() + 2 * s);
    std::vector<std::size_t> S2(perm.begin() + s, perm.begin() + 3 * s);
    ts = std::max(ts, isometry_defect(G, S));
    tss = std::max(tss, cross_norm(G, S, S1));
    ts2s = std::max(ts2s, cross_norm(G, S, S2));
  }
  return cs_constants(s, ts, tss, ts2s, false);
}

BoundConstants compute_bound_constants(const SaddleCertificate& cert, const SolverConfig& config, ConstSpan x0,
                                       ConstSpan y0, double C0, bool with_feasibility) {
  const Vector dx = sub(x0, cert.x_star);
  const Vector dy = sub(y0, cert.y_star);
  const double sigma_M = config.Sigma.tau_max();
  const double sigma_m = config.Sigma.tau_min();
  BoundConstants b;
  b.V0 = 0.5 * config.T.sq_norm_inv(dx) + 0.5 * config.Sigma.sq_norm_inv(dy);
  auto& C = b.C;
  C[0] = C0;
  C[1] = b.V0;
  C[2] = C0 + std::sqrt(2.0 * sigma_M * b.V0);
  C[3] = std::sqrt(2.0 * sigma_M * C0);
  C[4] = 2.0 * sigma_M;
  if (with_feasibility) {
    const double rho = sigma_m * (config.eta - 1.0) - sigma_M * config.xi * config.eta;
    if (!(rho > 0.0)) throw StrictConfigError("compute_bound_constants: rho <= 0, feasibility constants undefined");
    const double f = 2.0 * config.eta / rho;
    for (int i = 1; i <= 4; ++i) C[4 + i] = f * C[i];
    C[9] = config.eta * sigma_m * (config.eta - 1.0) / rho;
    b.has_feasibility = true;
  }
  return b;
}

TheoreticalBounds theoretical_bounds(const BoundConstants& c, double k, double delta) {
  if (k < 1.0) throw ConfigError("theoretical_bounds: k must be >= 1");
  if (delta < 0.0) throw ConfigError("theoretical_bounds: delta must be >= 0");
  const auto& C = c.C;
  const double d15 = delta * std::sqrt(delta), sk = std::sqrt(k);
  TheoreticalBounds t;
  t.gap = C[1] / k + C[2] * delta + C[3] * d15 * sk + C[4] * delta * delta * k;
  t.feas = C[5] / k + C[6] * delta + C[7] * d15 * sk + C[8] * delta * delta * k + C[9] * delta * delta;
  return t;
}

double recovery_bound(const CSConstants& cs, double A_norm, double feas, double breg) {
  if (!(cs.M < 1.0)) throw CertificateError("recovery_bound: M_s >= 1, the bound does not apply");
  return cs.Q * feas + (1.0 + cs.Q * A_norm) / (1.0 - cs.M) * breg;
}

std::size_t support_size(ConstSpan x, double zero_tol) {
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [&](double v) { return std::abs(v) > zero_tol; }));
}

double f1_support(ConstSpan x_est, ConstSpan x_true, double zero_tol) {
  if (x_est.size() != x_true.size()) throw ConfigError("f1_support: length mismatch");
  std::size_t tp = 0, est = 0, tru = 0;
  for (std::size_t i = 0; i < x_est.size(); ++i) {
    const bool e = std::abs(x_est[i]) > zero_tol, t = std::abs(x_true[i]) > zero_tol;
    est += e;
    tru += t;
    tp += e && t;
  }
  if (est == 0 && tru == 0) return 1.0;
  if (est == 0 || tru == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(est + tru);
}

}  // namespace iterreg

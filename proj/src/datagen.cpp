#include "iterreg/datagen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "iterreg/errors.hpp"

namespace iterreg {

namespace {

Vector unit_gaussian(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector u(n);
  if (n == 0) return u;
  double nrm = 0.0;
  while (nrm == 0.0) {
    for (double& e : u) e = normal(rng);
    nrm = norm2(u);
  }
  for (double& e : u) e /= nrm;
  return u;
}

}  // namespace

Matrix toeplitz_design(std::size_t n, std::size_t d, double rho, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("toeplitz_design: rho must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double c = std::sqrt(1.0 - rho * rho);
  Matrix A(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      z = j == 0 ? normal(rng) : rho * z + c * normal(rng);
      A(i, j) = z;
    }
  }
  return A;
}

SparseInstance sparse_instance(std::size_t n, std::size_t d, double rho, double sparsity_frac, double snr,
                               std::uint64_t seed) {
  if (!(sparsity_frac > 0.0 && sparsity_frac <= 1.0)) throw ConfigError("sparse_instance: sparsity_frac in (0, 1]");
  if (!(snr > 0.0)) throw ConfigError("sparse_instance: snr must be positive");
  SparseInstance inst;
  inst.seed = seed;
  inst.snr = snr;
  inst.A = toeplitz_design(n, d, rho, seed);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto k = static_cast<std::size_t>(std::llround(sparsity_frac * static_cast<double>(d)));
  inst.x_bar.assign(d, 0.0);
  for (std::size_t i = 0; i < k; ++i) inst.x_bar[idx[i]] = 1.0;

  inst.b_star = DenseOp(inst.A).apply(inst.x_bar);
  inst.b_delta = inst.b_star;
  if (std::isfinite(snr)) {
    const Vector u = unit_gaussian(n, rng);
    inst.delta = norm2(inst.b_star) / snr;
    for (std::size_t i = 0; i < n; ++i) inst.b_delta[i] += inst.delta * u[i];
    // record the realized noise norm so that delta = ||b_delta - b*|| holds to rounding
    inst.delta = norm2(sub(inst.b_delta, inst.b_star));
  }
  return inst;
}

Vector add_noise(ConstSpan b_star, double delta, std::uint64_t seed) {
  if (!(delta >= 0.0)) throw ConfigError("add_noise: delta must be nonnegative");
  std::mt19937_64 rng(seed);
  const Vector u = unit_gaussian(b_star.size(), rng);
  Vector b(b_star.begin(), b_star.end());
  axpy(delta, u, b);
  return b;
}

CertifiedInstance certified_instance(std::size_t n, std::size_t d, std::size_t s, std::uint64_t seed,
                                     std::size_t max_tries) {
  if (!(s >= 1 && s <= n && n <= d)) throw ConfigError("certified_instance: need 1 <= s <= n <= d");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> mag(0.5, 1.5);
  std::bernoulli_distribution coin(0.5);

  for (std::size_t t = 1; t <= max_tries; ++t) {
    Eigen::MatrixXd A(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) A(i, j) = normal(rng);
    A.colwise().normalize();

    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> S(perm.begin(), perm.begin() + s);
    std::sort(S.begin(), S.end());
    Eigen::VectorXd sg(s);
    for (std::size_t i = 0; i < s; ++i) sg(i) = coin(rng) ? 1.0 : -1.0;

    Eigen::MatrixXd AS(n, s);
    for (std::size_t i = 0; i < s; ++i) AS.col(i) = A.col(S[i]);
    // least-norm y with A_S^T y = sign pattern
    const Eigen::MatrixXd G = AS.transpose() * AS;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) continue;
    const Eigen::VectorXd y = AS * ldlt.solve(sg);
    const Eigen::VectorXd c = A.transpose() * y;

    double off = 0.0;
    for (std::size_t j = 0; j < d; ++j)
      if (!std::binary_search(S.begin(), S.end(), j)) off = std::max(off, std::abs(c(j)));
    double on = 0.0;
    for (std::size_t i = 0; i < s; ++i) on = std::max(on, std::abs(c(S[i]) - sg(i)));
    if (off > 1.0 - 1e-3 || on > 1e-10) continue;

    CertifiedInstance ci;
    ci.tries = t;
    ci.support = S;
    auto& inst = ci.inst;
    inst.seed = seed;
    inst.A = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) inst.A(i, j) = A(i, j);
    inst.x_bar.assign(d, 0.0);
    for (std::size_t i = 0; i < s; ++i) inst.x_bar[S[i]] = sg(i) * mag(rng);
    inst.b_star = DenseOp(inst.A).apply(inst.x_bar);
    inst.b_delta = inst.b_star;

    // sign convention: -A* y* must be a subgradient of ||.||_1 at x*
    ci.cert.x_star = inst.x_bar;
    ci.cert.y_star.resize(n);
    for (std::size_t i = 0; i < n; ++i) ci.cert.y_star[i] = -y(i);
    ci.cert.b_star = inst.b_star;
    return ci;
  }
  throw GenerationError("certified_instance: no certificate after " + std::to_string(max_tries) +
                        " tries; lower s or raise n");
}

ProblemSpec certified_problem(const CertifiedInstance& ci, ConstSpan b_delta, double delta) {
  ProblemSpec p;
  p.A = std::make_shared<DenseOp>(ci.inst.A);
  p.b_delta.assign(b_delta.begin(), b_delta.end());
  p.R = l1();
  p.cert = ci.cert;
  p.cert->delta = delta;
  p.delta = delta;
  p.x_true = ci.cert.x_star;
  return p;
}

CompletionInstance completion_instance(std::size_t d, std::size_t r, double hidden_frac, double delta,
                                       std::uint64_t seed) {
  if (r == 0 || r > d) throw ConfigError("completion_instance: need 1 <= r <= d");
  if (!(hidden_frac >= 0.0 && hidden_frac < 1.0)) throw ConfigError("completion_instance: hidden_frac in [0, 1)");
  if (!(delta >= 0.0)) throw ConfigError("completion_instance: delta must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  Eigen::MatrixXd U(d, r), V(d, r);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < r; ++j) U(i, j) = normal(rng);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < r; ++j) V(i, j) = normal(rng);
  Eigen::MatrixXd B = U * V.transpose();
  B *= 20.0 / B.norm();

  CompletionInstance ci;
  ci.d = d;
  ci.r = r;
  ci.delta = delta;
  ci.B_star = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) ci.B_star(i, j) = B(i, j);

  const std::size_t total = d * d;
  const auto count = static_cast<std::size_t>(std::llround((1.0 - hidden_frac) * static_cast<double>(total)));
  std::vector<std::size_t> flat(total);
  std::iota(flat.begin(), flat.end(), 0);
  std::shuffle(flat.begin(), flat.end(), rng);
  flat.resize(count);
  std::sort(flat.begin(), flat.end());
  for (std::size_t f : flat) ci.observed.emplace_back(f / d, f % d);

  ci.B_delta = Matrix(d, d);
  const Vector u = unit_gaussian(count, rng);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t f = flat[k];
    ci.B_delta.values()[f] = ci.B_star.values()[f] + delta * u[k];
  }
  ci.mask = std::make_shared<MaskingOp>(d, d, ci.observed);
  return ci;
}

IllposedInstance illposed_diag_instance(std::size_t N, double delta) {
  if (N == 0) throw ConfigError("illposed_diag_instance: N must be positive");
  if (!(delta >= 0.0)) throw ConfigError("illposed_diag_instance: delta must be nonnegative");
  IllposedInstance ii;
  double s = 0.0;
  for (std::size_t j = N; j >= 1; --j) s += 1.0 / (static_cast<double>(j) * static_cast<double>(j));
  ii.C = delta / std::sqrt(s);
  ii.a.resize(N);
  ii.b_star.resize(N);
  ii.x_star.resize(N);
  ii.x_delta.resize(N);
  Vector bd(N), ystar(N, -1.0);
  for (std::size_t k = 0; k < N; ++k) {
    const double i = static_cast<double>(k + 1);
    ii.a[k] = 1.0 / i;
    ii.b_star[k] = 1.0 / (i * i);
    bd[k] = ii.b_star[k] + ii.C / i;
    ii.x_star[k] = 1.0 / i;
    ii.x_delta[k] = bd[k] * i;
  }
  auto& p = ii.problem;
  p.A = std::make_shared<DiagonalOp>(ii.a);
  p.b_delta = bd;
  p.R = sq_l2();
  p.delta = delta;
  p.b_star = ii.b_star;
  // x* = -A* y* with y* = -1 solves the noiseless problem for R = 1/2 ||.||^2
  p.cert = SaddleCertificate{ii.x_star, ystar, ii.b_star, delta};
  return ii;
}

ProblemSpec unfeasible_toy(bool feasible) {
  ProblemSpec p;
  p.A = std::make_shared<DenseOp>(Matrix(2, 1, Vector{1.0, 1.0}));
  p.b_delta = feasible ? Vector{1.0, 1.0} : Vector{1.0, 0.0};
  p.R = sq_l2();
  return p;
}

LibsvmData parse_libsvm(std::istream& in) {
  std::vector<std::size_t> row_ptr{0}, cols;
  Vector vals, labels;
  std::size_t max_col = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;

    auto parse_double = [&](const std::string& s, const char* what) {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &pos);
      } catch (...) {
        pos = 0;
      }
      if (pos == 0 || pos != s.size()) throw ParseError(std::string("non-numeric ") + what + " '" + s + "'", lineno);
      return v;
    };
    labels.push_back(parse_double(tok, "label"));

    std::size_t prev = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0) throw ParseError("expected idx:val, got '" + tok + "'", lineno);
      const std::string is = tok.substr(0, colon);
      if (!std::all_of(is.begin(), is.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw ParseError("non-numeric index '" + is + "'", lineno);
      std::size_t idx = 0;
      try {
        idx = std::stoul(is);
      } catch (...) {
        throw ParseError("index out of range '" + is + "'", lineno);
      }
      if (idx == 0) throw ParseError("indices are 1-based", lineno);
      if (idx <= prev) throw ParseError("indices must be strictly ascending", lineno);
      prev = idx;
      const double v = parse_double(tok.substr(colon + 1), "value");
      cols.push_back(idx - 1);
      vals.push_back(v);
      max_col = std::max(max_col, idx);
    }
    row_ptr.push_back(cols.size());
  }
  LibsvmData out;
  const std::size_t rows = labels.size();
  out.A = std::make_shared<CsrOp>(rows, max_col, std::move(row_ptr), std::move(cols), std::move(vals));
  out.labels = std::move(labels);
  return out;
}

LibsvmData parse_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_libsvm(in);
}

void write_libsvm(std::ostream& out, const CsrOp& A, ConstSpan labels) {
  if (labels.size() != A.out_dim()) throw ConfigError("write_libsvm: label count does not match rows");
  char buf[64];
  for (std::size_t i = 0; i < A.out_dim(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", labels[i]);
    out << buf;
    for (std::size_t p = A.row_ptr()[i]; p < A.row_ptr()[i + 1]; ++p) {
      std::snprintf(buf, sizeof buf, " %zu:%.17g", A.col_idx()[p] + 1, A.values()[p]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace iterreg

#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "iterreg/problem.hpp"

namespace iterreg {

/// Rows i.i.d.; within a row z_1 ~ N(0,1), z_j = rho z_{j-1} + sqrt(1-rho^2) zeta_j,
/// so that corr(col_i, col_j) = rho^|i-j| and every entry has unit variance.
Matrix toeplitz_design(std::size_t n, std::size_t d, double rho, std::uint64_t seed);

struct SparseInstance {
  Matrix A;
  Vector x_bar;
  Vector b_star;
  Vector b_delta;
  double delta = 0.0;
  double snr = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
};

/// x_bar has round(frac d) unit entries; Gaussian noise scaled so that
/// ||A x_bar|| / ||eps|| = snr exactly (snr = inf gives no noise).
SparseInstance sparse_instance(std::size_t n, std::size_t d, double rho, double sparsity_frac, double snr,
                               std::uint64_t seed);

/// b* + delta u with u a uniformly random unit vector.
Vector add_noise(ConstSpan b_star, double delta, std::uint64_t seed);

struct CertifiedInstance {
  SparseInstance inst;  // x_bar = x*
  SaddleCertificate cert;
  std::vector<std::size_t> support;
  std::size_t tries = 0;
};

/// Gaussian A with unit-norm columns and an l1 saddle point (x*, y*) whose
/// extended support is exactly the support of x*, with margin 1e-3.
CertifiedInstance certified_instance(std::size_t n, std::size_t d, std::size_t s, std::uint64_t seed,
                                     std::size_t max_tries = 1000);

/// ProblemSpec for an l1 certified instance with data b_delta.
ProblemSpec certified_problem(const CertifiedInstance& ci, ConstSpan b_delta, double delta);

struct CompletionInstance {
  std::size_t d = 0, r = 0;
  Matrix B_star;
  std::vector<std::pair<std::size_t, std::size_t>> observed;
  Matrix B_delta;  // zero on hidden entries
  double delta = 0.0;
  std::shared_ptr<MaskingOp> mask;
};

/// B* = U V^T with Frobenius norm 20; round((1 - hidden_frac) d^2) observed
/// entries; Gaussian noise on the observed entries with norm delta.
CompletionInstance completion_instance(std::size_t d, std::size_t r, double hidden_frac, double delta,
                                       std::uint64_t seed);

struct IllposedInstance {
  ProblemSpec problem;
  Vector a;
  Vector b_star;
  Vector x_star;   // 1/i
  Vector x_delta;  // b_delta / a, the noisy solution
  double C = 0.0;
};

/// Diagonal a_i = 1/i, b*_i = 1/i^2, b^delta_i = b*_i + C/i with
/// C = delta / sqrt(sum_{j<=N} 1/j^2), R = 1/2 ||.||^2.
IllposedInstance illposed_diag_instance(std::size_t N, double delta);

/// A = (1, 1)^T, R = 1/2 x^2. b = (1, 0) is unfeasible with normal solution 1/2;
/// the feasible variant uses b = (1, 1).
ProblemSpec unfeasible_toy(bool feasible = false);

struct LibsvmData {
  std::shared_ptr<CsrOp> A;
  Vector labels;
};

LibsvmData parse_libsvm(std::istream& in);
LibsvmData parse_libsvm(const std::string& path);
void write_libsvm(std::ostream& out, const CsrOp& A, ConstSpan labels);

}  // namespace iterreg

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>

#include "iterreg/types.hpp"

namespace testutil {

using iterreg::Matrix;
using iterreg::Vector;

inline Vector randn(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (double& e : v) e = normal(rng);
  return v;
}

inline Matrix randn(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  return Matrix(r, c, randn(r * c, rng));
}

inline Eigen::MatrixXd to_eigen(const Matrix& M) {
  Eigen::MatrixXd E(M.rows(), M.cols());
  for (std::size_t i = 0; i < M.rows(); ++i)
    for (std::size_t j = 0; j < M.cols(); ++j) E(i, j) = M(i, j);
  return E;
}

inline double svd_norm(const Matrix& M) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(M));
  return svd.singularValues()(0);
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Golden-section minimizer of a unimodal function on [lo, hi].
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  for (int i = 0; i < iters; ++i) {
    if (f(c) < f(d))
      b = d;
    else
      a = c;
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return 0.5 * (a + b);
}

}  // namespace testutil

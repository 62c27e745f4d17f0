#include "iterreg/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cstdlib>
#include <string>

#ifdef ITERREG_HAVE_OPENMP
#include <omp.h>
#endif

namespace iterreg::kernels {

namespace serial {

void gemv(const Matrix& A, ConstSpan x, MutSpan y) {
  assert(x.size() == A.cols() && y.size() == A.rows());
  const std::size_t n = A.cols();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const double* a = A.data() + i * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a[j] * x[j];
    y[i] = s;
  }
}

void gemv_t(const Matrix& A, ConstSpan x, MutSpan y) {
  assert(x.size() == A.rows() && y.size() == A.cols());
  const std::size_t n = A.cols();
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const double* a = A.data() + i * n;
    const double xi = x[i];
    for (std::size_t j = 0; j < n; ++j) y[j] += a[j] * xi;
  }
}

}  // namespace serial

namespace omp {

void gemv(const Matrix& A, ConstSpan x, MutSpan y) {
  assert(x.size() == A.cols() && y.size() == A.rows());
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(A.rows());
  const std::size_t n = A.cols();
  const double* data = A.data();
  const double* xp = x.data();
  double* yp = y.data();
#pragma omp parallel for schedule(static) num_threads(thread_budget())
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const double* a = data + static_cast<std::size_t>(i) * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a[j] * xp[j];
    yp[i] = s;
  }
}

void gemv_t(const Matrix& A, ConstSpan x, MutSpan y) {
  assert(x.size() == A.rows() && y.size() == A.cols());
  // Column blocks: each thread owns a contiguous slice of y and sweeps all
  // rows, so the per-entry summation order matches the serial kernel.
  constexpr std::size_t block = 256;
  const std::size_t m = A.rows();
  const std::size_t n = A.cols();
  const std::ptrdiff_t nblocks = static_cast<std::ptrdiff_t>((n + block - 1) / block);
  const double* data = A.data();
  const double* xp = x.data();
  double* yp = y.data();
#pragma omp parallel for schedule(static) num_threads(thread_budget())
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    const std::size_t j0 = static_cast<std::size_t>(b) * block;
    const std::size_t j1 = std::min(n, j0 + block);
    for (std::size_t j = j0; j < j1; ++j) yp[j] = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double* a = data + i * n;
      const double xi = xp[i];
      for (std::size_t j = j0; j < j1; ++j) yp[j] += a[j] * xi;
    }
  }
}

}  // namespace omp

int thread_budget() {
  static const int budget = [] {
    if (const char* env = std::getenv("ITERREG_THREADS")) {
      try {
        const int v = std::stoi(env);
        if (v >= 1) return v;
      } catch (...) {
      }
    }
#ifdef ITERREG_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
  }();
  return budget;
}

void gemv(const Matrix& A, ConstSpan x, MutSpan y) {
  if (A.size() >= parallel_threshold && thread_budget() > 1)
    omp::gemv(A, x, y);
  else
    serial::gemv(A, x, y);
}

void gemv_t(const Matrix& A, ConstSpan x, MutSpan y) {
  if (A.size() >= parallel_threshold && thread_budget() > 1)
    omp::gemv_t(A, x, y);
  else
    serial::gemv_t(A, x, y);
}

}  // namespace iterreg::kernels

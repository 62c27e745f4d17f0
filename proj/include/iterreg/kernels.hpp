#pragma once

#include "iterreg/types.hpp"

// Dense matrix-vector kernels. The serial versions are the reference; the
// omp versions split the work so that every output entry is accumulated in
// the same order, which makes the two bitwise identical.

namespace iterreg::kernels {

namespace serial {
// y = A x
void gemv(const Matrix& A, ConstSpan x, MutSpan y);
// y = A^T x
void gemv_t(const Matrix& A, ConstSpan x, MutSpan y);
}  // namespace serial

namespace omp {
void gemv(const Matrix& A, ConstSpan x, MutSpan y);
void gemv_t(const Matrix& A, ConstSpan x, MutSpan y);
}  // namespace omp

// Picks serial or omp depending on problem size and thread budget.
void gemv(const Matrix& A, ConstSpan x, MutSpan y);
void gemv_t(const Matrix& A, ConstSpan x, MutSpan y);

// Threads available to the library: ITERREG_THREADS if set, else the OpenMP default.
int thread_budget();

// Below this many matrix entries the dispatcher stays serial.
inline constexpr std::size_t parallel_threshold = 1u << 15;

}  // namespace iterreg::kernels

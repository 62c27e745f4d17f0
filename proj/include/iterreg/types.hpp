#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace iterreg {

using Vector = std::vector<double>;
using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

/// Dense matrix stored row-major in a flat array.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, Vector data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  MutSpan row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  ConstSpan row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vector column(std::size_t j) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const Vector& values() const { return data_; }
  Vector& values() { return data_; }

  Matrix transpose() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

double dot(ConstSpan a, ConstSpan b);
double norm2(ConstSpan a);
double norm1(ConstSpan a);
double norm_inf(ConstSpan a);
double sq_norm(ConstSpan a);

// y += alpha * x
void axpy(double alpha, ConstSpan x, MutSpan y);

Vector add(ConstSpan a, ConstSpan b);
Vector sub(ConstSpan a, ConstSpan b);
Vector scaled(double alpha, ConstSpan a);

bool all_finite(ConstSpan a);

inline double sign(double v) { return (v > 0.0) - (v < 0.0); }

inline double soft_threshold(double v, double t) {
  const double a = std::abs(v) - t;
  return a > 0.0 ? std::copysign(a, v) : 0.0;
}

}  // namespace iterreg

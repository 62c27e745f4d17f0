#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "iterreg/types.hpp"

namespace iterreg {

/// Bounded linear map between finite-dimensional spaces.
///
/// Implementations are immutable after construction, so a single instance
/// may be shared between threads.
class LinOp {
 public:
  virtual ~LinOp() = default;

  virtual std::size_t in_dim() const = 0;
  virtual std::size_t out_dim() const = 0;

  /// y = A x. y must have out_dim entries.
  virtual void apply_to(ConstSpan x, MutSpan y) const = 0;
  /// x = A* y. x must have in_dim entries.
  virtual void adjoint_to(ConstSpan y, MutSpan x) const = 0;

  /// Upper bound on the operator norm, when one is known in closed form.
  virtual std::optional<double> norm_hint() const { return std::nullopt; }

  Vector apply(ConstSpan x) const;
  Vector adjoint(ConstSpan y) const;
};

using LinOpPtr = std::shared_ptr<const LinOp>;

class DenseOp final : public LinOp {
 public:
  explicit DenseOp(Matrix A) : A_(std::move(A)) {}
  std::size_t in_dim() const override { return A_.cols(); }
  std::size_t out_dim() const override { return A_.rows(); }
  void apply_to(ConstSpan x, MutSpan y) const override;
  void adjoint_to(ConstSpan y, MutSpan x) const override;
  const Matrix& matrix() const { return A_; }

 private:
  Matrix A_;
};

class DiagonalOp final : public LinOp {
 public:
  explicit DiagonalOp(Vector d) : d_(std::move(d)) {}
  std::size_t in_dim() const override { return d_.size(); }
  std::size_t out_dim() const override { return d_.size(); }
  void apply_to(ConstSpan x, MutSpan y) const override;
  void adjoint_to(ConstSpan y, MutSpan x) const override { apply_to(y, x); }
  std::optional<double> norm_hint() const override { return norm_inf(d_); }
  const Vector& diagonal() const { return d_; }

 private:
  Vector d_;
};

/// scale * Id_n.
class IdentityOp final : public LinOp {
 public:
  explicit IdentityOp(std::size_t n, double scale = 1.0) : n_(n), scale_(scale) {}
  std::size_t in_dim() const override { return n_; }
  std::size_t out_dim() const override { return n_; }
  void apply_to(ConstSpan x, MutSpan y) const override;
  void adjoint_to(ConstSpan y, MutSpan x) const override { apply_to(y, x); }
  std::optional<double> norm_hint() const override { return std::abs(scale_); }

 private:
  std::size_t n_;
  double scale_;
};

class ZeroOp final : public LinOp {
 public:
  ZeroOp(std::size_t out_dim, std::size_t in_dim) : out_(out_dim), in_(in_dim) {}
  std::size_t in_dim() const override { return in_; }
  std::size_t out_dim() const override { return out_; }
  void apply_to(ConstSpan x, MutSpan y) const override;
  void adjoint_to(ConstSpan y, MutSpan x) const override;
  std::optional<double> norm_hint() const override { return 0.0; }

 private:
  std::size_t out_, in_;
};

/// Keeps the observed entries of a p1 x p2 image (row-major) and zeroes the rest.
class MaskingOp final : public LinOp {
 public:
  MaskingOp(std::size_t p1, std::size_t p2, const std::vector<std::pair<std::size_t, std::size_t>>& observed);
  std::size_t in_dim() const override { return p1_ * p2_; }
  std::size_t out_dim() const override { return p1_ * p2_; }
  void apply_to(ConstSpan x, MutSpan y) const override;
  void adjoint_to(ConstSpan y, MutSpan x) const override { apply_to(y, x); }
  std::optional<double> norm_hint() const override { return observed_.empty() ? 0.0 : 1.0; }
  const std::vector<std::size_t>& observed_flat() const { return observed_; }
  std::size_t rows() const { return p1_; }
  std::size_t cols() const { return p2_; }

 private:
  std::size_t p1_, p2_;
  std::vector<std::size_t> observed_;  // sorted flat indices
};

/// Forward-difference gradient of a p1 x p2 image stored row-major.
/// Output is [horizontal; vertical], each p1*p2 long, with the last
/// difference along each axis set to zero.
class Grad2dOp final : public LinOp {
 public:
  Grad2dOp(std::size_t p1, std::size_t p2) : p1_(p1), p2_(p2) {}
  std::size_t in_dim() const override { return p1_ * p2_; }
  std::size_t out_dim() const override { return 2 * p1_ * p2_; }
  void apply_to(ConstSpan x, MutSpan y) const override;
  void adjoint_to(ConstSpan y, MutSpan x) const override;
  std::optional<double> norm_hint() const override { return std::sqrt(8.0); }

 private:
  std::size_t p1_, p2_;
};

/// Compressed sparse row matrix.
class CsrOp final : public LinOp {
 public:
  CsrOp(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr, std::vector<std::size_t> col_idx,
        Vector values);
  std::size_t in_dim() const override { return cols_; }
  std::size_t out_dim() const override { return rows_; }
  void apply_to(ConstSpan x, MutSpan y) const override;
  void adjoint_to(ConstSpan y, MutSpan x) const override;

  std::size_t nnz() const { return values_.size(); }
  const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const { return col_idx_; }
  const Vector& values() const { return values_; }

 private:
  std::size_t rows_, cols_;
  std::vector<std::size_t> row_ptr_, col_idx_;
  Vector values_;
};

/// Rows `rows` of another operator.
class RowSelectOp final : public LinOp {
 public:
  RowSelectOp(LinOpPtr base, std::vector<std::size_t> rows);
  std::size_t in_dim() const override { return base_->in_dim(); }
  std::size_t out_dim() const override { return rows_.size(); }
  void apply_to(ConstSpan x, MutSpan y) const override;
  void adjoint_to(ConstSpan y, MutSpan x) const override;
  std::optional<double> norm_hint() const override { return base_->norm_hint(); }

 private:
  LinOpPtr base_;
  std::vector<std::size_t> rows_;
};

/// Grid of operator blocks. A null block is a zero block; its size is taken
/// from the other blocks in its row and column or from the explicit sizes.
class BlockOp final : public LinOp {
 public:
  explicit BlockOp(std::vector<std::vector<LinOpPtr>> blocks, std::vector<std::size_t> row_sizes = {},
                   std::vector<std::size_t> col_sizes = {});
  std::size_t in_dim() const override { return in_; }
  std::size_t out_dim() const override { return out_; }
  void apply_to(ConstSpan x, MutSpan y) const override;
  void adjoint_to(ConstSpan y, MutSpan x) const override;
  std::optional<double> norm_hint() const override;

  const std::vector<std::size_t>& row_sizes() const { return row_sizes_; }
  const std::vector<std::size_t>& col_sizes() const { return col_sizes_; }

 private:
  std::vector<std::vector<LinOpPtr>> blocks_;
  std::vector<std::size_t> row_sizes_, col_sizes_;
  std::vector<std::size_t> row_off_, col_off_;
  std::size_t in_ = 0, out_ = 0;
};

/// Estimate of ||A|| from power iteration on A*A. The returned value is
/// ||A v|| for a unit v, hence never above the true norm.
double power_iteration_norm(const LinOp& op, int iters, std::uint64_t seed);

/// norm_hint when available, else 100 power iterations with a fixed seed.
double operator_norm(const LinOp& op);

/// Dense matrix of the operator, built column by column.
Matrix dense_assembly(const LinOp& op);

/// (b o A | -Id) and the all-ones right-hand side for hinge-type constraints.
std::pair<std::shared_ptr<BlockOp>, Vector> classif_reformulate(const Matrix& A, ConstSpan labels);

/// [[blur, 0], [grad, -Id]] and (vec(B), 0) for the slack form of TV deblurring.
std::pair<std::shared_ptr<BlockOp>, Vector> tv_reformulate(LinOpPtr blur, const Matrix& B);

}  // namespace iterreg

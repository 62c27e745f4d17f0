#include "iterreg/linops.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "iterreg/errors.hpp"
#include "iterreg/kernels.hpp"

namespace iterreg {

Vector LinOp::apply(ConstSpan x) const {
  if (x.size() != in_dim()) throw ConfigError("apply: expected input of size " + std::to_string(in_dim()));
  Vector y(out_dim());
  apply_to(x, y);
  return y;
}

Vector LinOp::adjoint(ConstSpan y) const {
  if (y.size() != out_dim()) throw ConfigError("adjoint: expected input of size " + std::to_string(out_dim()));
  Vector x(in_dim());
  adjoint_to(y, x);
  return x;
}

void DenseOp::apply_to(ConstSpan x, MutSpan y) const { kernels::gemv(A_, x, y); }
void DenseOp::adjoint_to(ConstSpan y, MutSpan x) const { kernels::gemv_t(A_, y, x); }

void DiagonalOp::apply_to(ConstSpan x, MutSpan y) const {
  for (std::size_t i = 0; i < d_.size(); ++i) y[i] = d_[i] * x[i];
}

void IdentityOp::apply_to(ConstSpan x, MutSpan y) const {
  for (std::size_t i = 0; i < n_; ++i) y[i] = scale_ * x[i];
}

void ZeroOp::apply_to(ConstSpan, MutSpan y) const { std::fill(y.begin(), y.end(), 0.0); }
void ZeroOp::adjoint_to(ConstSpan, MutSpan x) const { std::fill(x.begin(), x.end(), 0.0); }

MaskingOp::MaskingOp(std::size_t p1, std::size_t p2,
                     const std::vector<std::pair<std::size_t, std::size_t>>& observed)
    : p1_(p1), p2_(p2) {
  observed_.reserve(observed.size());
  for (auto [i, j] : observed) {
    if (i >= p1 || j >= p2)
      throw ConfigError("masking_op: observed index (" + std::to_string(i) + "," + std::to_string(j) +
                        ") out of range");
    observed_.push_back(i * p2 + j);
  }
  std::sort(observed_.begin(), observed_.end());
  observed_.erase(std::unique(observed_.begin(), observed_.end()), observed_.end());
}

void MaskingOp::apply_to(ConstSpan x, MutSpan y) const {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t idx : observed_) y[idx] = x[idx];
}

void Grad2dOp::apply_to(ConstSpan x, MutSpan y) const {
  const std::size_t n = p1_ * p2_;
  MutSpan h = y.subspan(0, n), v = y.subspan(n, n);
  for (std::size_t i = 0; i < p1_; ++i) {
    for (std::size_t j = 0; j < p2_; ++j) {
      const std::size_t k = i * p2_ + j;
      h[k] = j + 1 < p2_ ? x[k + 1] - x[k] : 0.0;
      v[k] = i + 1 < p1_ ? x[k + p2_] - x[k] : 0.0;
    }
  }
}

void Grad2dOp::adjoint_to(ConstSpan y, MutSpan x) const {
  const std::size_t n = p1_ * p2_;
  ConstSpan h = y.subspan(0, n), v = y.subspan(n, n);
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t i = 0; i < p1_; ++i) {
    for (std::size_t j = 0; j < p2_; ++j) {
      const std::size_t k = i * p2_ + j;
      if (j + 1 < p2_) {
        x[k + 1] += h[k];
        x[k] -= h[k];
      }
      if (i + 1 < p1_) {
        x[k + p2_] += v[k];
        x[k] -= v[k];
      }
    }
  }
}

CsrOp::CsrOp(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
             std::vector<std::size_t> col_idx, Vector values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || col_idx_.size() != values_.size() || row_ptr_.back() != values_.size())
    throw ConfigError("CsrOp: inconsistent storage");
  for (std::size_t c : col_idx_)
    if (c >= cols_) throw ConfigError("CsrOp: column index out of range");
}

void CsrOp::apply_to(ConstSpan x, MutSpan y) const {
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * x[col_idx_[p]];
    y[i] = s;
  }
}

void CsrOp::adjoint_to(ConstSpan y, MutSpan x) const {
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) x[col_idx_[p]] += values_[p] * y[i];
}

RowSelectOp::RowSelectOp(LinOpPtr base, std::vector<std::size_t> rows) : base_(std::move(base)), rows_(std::move(rows)) {
  for (std::size_t r : rows_)
    if (r >= base_->out_dim()) throw ConfigError("RowSelectOp: row index out of range");
}

void RowSelectOp::apply_to(ConstSpan x, MutSpan y) const {
  const Vector full = base_->apply(x);
  for (std::size_t i = 0; i < rows_.size(); ++i) y[i] = full[rows_[i]];
}

void RowSelectOp::adjoint_to(ConstSpan y, MutSpan x) const {
  Vector full(base_->out_dim(), 0.0);
  for (std::size_t i = 0; i < rows_.size(); ++i) full[rows_[i]] += y[i];
  base_->adjoint_to(full, x);
}

BlockOp::BlockOp(std::vector<std::vector<LinOpPtr>> blocks, std::vector<std::size_t> row_sizes,
                 std::vector<std::size_t> col_sizes)
    : blocks_(std::move(blocks)) {
  const std::size_t R = blocks_.size();
  if (R == 0) throw ConfigError("BlockOp: empty block grid");
  const std::size_t C = blocks_[0].size();
  for (const auto& row : blocks_)
    if (row.size() != C) throw ConfigError("BlockOp: ragged block grid");

  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  row_sizes_ = row_sizes.empty() ? std::vector<std::size_t>(R, unset) : std::move(row_sizes);
  col_sizes_ = col_sizes.empty() ? std::vector<std::size_t>(C, unset) : std::move(col_sizes);
  if (row_sizes_.size() != R || col_sizes_.size() != C) throw ConfigError("BlockOp: size lists do not match grid");

  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      const auto& b = blocks_[r][c];
      if (!b) continue;
      auto check = [](std::size_t& slot, std::size_t value, const char* what) {
        if (slot == unset)
          slot = value;
        else if (slot != value)
          throw ConfigError(std::string("BlockOp: inconsistent ") + what + " dimensions");
      };
      check(row_sizes_[r], b->out_dim(), "row");
      check(col_sizes_[c], b->in_dim(), "column");
    }
  }
  for (std::size_t s : row_sizes_)
    if (s == unset) throw ConfigError("BlockOp: row of zero blocks needs an explicit size");
  for (std::size_t s : col_sizes_)
    if (s == unset) throw ConfigError("BlockOp: column of zero blocks needs an explicit size");

  row_off_.assign(R + 1, 0);
  col_off_.assign(C + 1, 0);
  for (std::size_t r = 0; r < R; ++r) row_off_[r + 1] = row_off_[r] + row_sizes_[r];
  for (std::size_t c = 0; c < C; ++c) col_off_[c + 1] = col_off_[c] + col_sizes_[c];
  out_ = row_off_[R];
  in_ = col_off_[C];
}

void BlockOp::apply_to(ConstSpan x, MutSpan y) const {
  std::fill(y.begin(), y.end(), 0.0);
  Vector tmp;
  for (std::size_t r = 0; r < blocks_.size(); ++r) {
    MutSpan yr = y.subspan(row_off_[r], row_sizes_[r]);
    tmp.resize(row_sizes_[r]);
    for (std::size_t c = 0; c < blocks_[r].size(); ++c) {
      const auto& b = blocks_[r][c];
      if (!b) continue;
      b->apply_to(x.subspan(col_off_[c], col_sizes_[c]), tmp);
      axpy(1.0, tmp, yr);
    }
  }
}

void BlockOp::adjoint_to(ConstSpan y, MutSpan x) const {
  std::fill(x.begin(), x.end(), 0.0);
  Vector tmp;
  for (std::size_t c = 0; c < col_sizes_.size(); ++c) {
    MutSpan xc = x.subspan(col_off_[c], col_sizes_[c]);
    tmp.resize(col_sizes_[c]);
    for (std::size_t r = 0; r < blocks_.size(); ++r) {
      const auto& b = blocks_[r][c];
      if (!b) continue;
      b->adjoint_to(y.subspan(row_off_[r], row_sizes_[r]), tmp);
      axpy(1.0, tmp, xc);
    }
  }
}

std::optional<double> BlockOp::norm_hint() const {
  // ||A|| <= Frobenius norm of the matrix of block norms.
  double s = 0.0;
  for (const auto& row : blocks_) {
    for (const auto& b : row) {
      if (!b) continue;
      auto h = b->norm_hint();
      if (!h) return std::nullopt;
      s += *h * *h;
    }
  }
  return std::sqrt(s);
}

double power_iteration_norm(const LinOp& op, int iters, std::uint64_t seed) {
  if (iters < 1) throw ConfigError("power_iteration_norm: iters must be >= 1");
  const std::size_t n = op.in_dim();
  if (n == 0 || op.out_dim() == 0) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(n);
  for (double& e : v) e = normal(rng);
  double nv = norm2(v);
  for (double& e : v) e /= nv;

  Vector Av(op.out_dim()), w(n);
  double est = 0.0;
  for (int it = 0; it < iters; ++it) {
    op.apply_to(v, Av);
    op.adjoint_to(Av, w);
    const double nw = norm2(w);
    if (nw == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    const double prev = est;
    est = std::sqrt(nw);
    if (it > 0 && std::abs(est - prev) <= 1e-15 * est) break;
  }
  op.apply_to(v, Av);
  return norm2(Av);
}

double operator_norm(const LinOp& op) {
  if (auto h = op.norm_hint()) return *h;
  return power_iteration_norm(op, 100, 0x5eed);
}

Matrix dense_assembly(const LinOp& op) {
  const std::size_t m = op.out_dim(), n = op.in_dim();
  Matrix M(m, n);
  Vector e(n, 0.0), col(m);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    op.apply_to(e, col);
    for (std::size_t i = 0; i < m; ++i) M(i, j) = col[i];
    e[j] = 0.0;
  }
  return M;
}

std::pair<std::shared_ptr<BlockOp>, Vector> classif_reformulate(const Matrix& A, ConstSpan labels) {
  if (labels.size() != A.rows())
    throw ConfigError("classif_reformulate: " + std::to_string(A.rows()) + " rows but " +
                      std::to_string(labels.size()) + " labels");
  Matrix bA = A;
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const double l = labels[i];
    if (l != 1.0 && l != -1.0) throw ConfigError("classif_reformulate: labels must be +1 or -1");
    for (double& v : bA.row(i)) v *= l;
  }
  const std::size_t n = A.rows();
  auto op = std::make_shared<BlockOp>(std::vector<std::vector<LinOpPtr>>{
      {std::make_shared<DenseOp>(std::move(bA)), std::make_shared<IdentityOp>(n, -1.0)}});
  return {op, Vector(n, 1.0)};
}

std::pair<std::shared_ptr<BlockOp>, Vector> tv_reformulate(LinOpPtr blur, const Matrix& B) {
  const std::size_t p1 = B.rows(), p2 = B.cols(), n = p1 * p2;
  if (!blur || blur->in_dim() != n || blur->out_dim() != n)
    throw ConfigError("tv_reformulate: blur must map " + std::to_string(n) + "-pixel images to themselves");
  auto op = std::make_shared<BlockOp>(std::vector<std::vector<LinOpPtr>>{
      {std::move(blur), nullptr},
      {std::make_shared<Grad2dOp>(p1, p2), std::make_shared<IdentityOp>(2 * n, -1.0)}});
  Vector rhs(3 * n, 0.0);
  std::copy(B.values().begin(), B.values().end(), rhs.begin());
  return {op, rhs};
}

}  // namespace iterreg

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "iterreg/types.hpp"

namespace iterreg {

/// Positive diagonal metric, used for the primal and dual step sizes.
class DiagMetric {
 public:
  DiagMetric() = default;
  explicit DiagMetric(Vector diag);
  static DiagMetric scalar(std::size_t n, double value);

  std::size_t size() const { return d_.size(); }
  double operator[](std::size_t i) const { return d_[i]; }
  const Vector& diag() const { return d_; }
  double tau_min() const { return min_; }
  double tau_max() const { return max_; }
  bool is_scalar() const { return min_ == max_; }
  DiagMetric slice(std::size_t offset, std::size_t len) const;

  // ||x||_T^2 = <T^{-1} x, x>
  double sq_norm_inv(ConstSpan x) const;

 private:
  Vector d_;
  double min_ = 0.0, max_ = 0.0;
};

enum class RegKind { l1, group_l21, nuclear, nonneg_indicator, sq_l2, zero, separable_sum };

std::string to_string(RegKind kind);

/// Convex regularizer with a prox in a diagonal metric:
///   prox^T_R(v) = argmin_p R(p) + 1/2 <T^{-1}(p - v), p - v>.
class Regularizer {
 public:
  virtual ~Regularizer() = default;
  virtual RegKind kind() const = 0;
  /// R(x); +inf outside the domain.
  virtual double value(ConstSpan x) const = 0;
  /// R*(g); +inf outside the domain of the conjugate.
  virtual double conjugate(ConstSpan g) const = 0;
  virtual void prox(ConstSpan v, const DiagMetric& T, MutSpan out) const = 0;

  /// Euclidean projection onto dom R* (used to repair perturbed prox outputs).
  virtual void project_conjugate_domain(MutSpan g) const = 0;
  /// Euclidean projection onto dom R.
  virtual void project_primal_domain(MutSpan) const {}

  Vector prox_diag(ConstSpan v, const DiagMetric& T) const;
};

using RegularizerPtr = std::shared_ptr<const Regularizer>;

enum class GroupLayout {
  contiguous,  // group g is entries [g*size, (g+1)*size)
  strided      // group g is entries {g, g + n_groups, g + 2 n_groups, ...}
};

struct RegularizerBlock {
  RegularizerPtr reg;
  std::size_t length;
};

RegularizerPtr l1();
RegularizerPtr group_l21(std::size_t n_groups, std::size_t group_size, GroupLayout layout = GroupLayout::contiguous);
/// Nuclear norm of the rows x cols matrix stored row-major in x. Needs a scalar metric.
RegularizerPtr nuclear(std::size_t rows, std::size_t cols);
RegularizerPtr nonneg();
RegularizerPtr sq_l2();
RegularizerPtr zero();
RegularizerPtr separable_sum(std::vector<RegularizerBlock> blocks);

/// Soft-thresholding with per-coordinate threshold T_ii.
Vector l1_prox_diag(ConstSpan v, const DiagMetric& T);
/// Row-wise group shrinkage: row r -> max(1 - tau/||r||, 0) r.
Matrix group_l21_prox(const Matrix& V, double tau);
/// Singular-value soft-thresholding.
Matrix nuclear_prox(const Matrix& V, double tau);
Vector nonneg_prox(ConstSpan v, const DiagMetric& T);
double nuclear_norm(const Matrix& V);
double spectral_norm(const Matrix& V);

/// Smallest eps with T^{-1}(input - output) in the eps-subdifferential of R at
/// output: R(p) + R*(g) - <g, p>, clamped at 0. +inf when g is outside dom R*.
double epsilon_certificate(const Regularizer& R, ConstSpan input, ConstSpan output, const DiagMetric& T);

struct ProxErrorSchedule {
  enum class Mode { exact, constant, noise_proportional };
  Mode mode = Mode::exact;
  double C0 = 0.0;
  double delta = 0.0;

  /// Largest admissible eps at iteration k.
  double budget(std::size_t k) const;
};

struct InexactProxResult {
  Vector x;
  double epsilon = 0.0;
  bool fell_back = false;
};

/// Exact prox perturbed along a random direction, with the magnitude
/// bisected until the certified eps lies in (0, budget].
InexactProxResult inexact_prox(const Regularizer& R, ConstSpan v, const DiagMetric& T,
                               const ProxErrorSchedule& schedule, std::size_t k, std::mt19937_64& rng);

}  // namespace iterreg

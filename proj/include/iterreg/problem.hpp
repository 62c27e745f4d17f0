#pragma once

#include <functional>
#include <optional>

#include "iterreg/linops.hpp"
#include "iterreg/regularizers.hpp"

namespace iterreg {

/// Differentiable term F with L-Lipschitz gradient.
struct SmoothTerm {
  std::function<Vector(ConstSpan)> grad;
  double L = 0.0;
  std::function<double(ConstSpan)> value;
};

/// F(x) = (weight/2) ||x||^2.
SmoothTerm quadratic_term(double weight);

/// A saddle point (x*, y*) of the noiseless problem together with the exact
/// data b* and the noise level delta >= ||b^delta - b*||.
struct SaddleCertificate {
  Vector x_star;
  Vector y_star;
  Vector b_star;
  double delta = 0.0;
};

struct HoldoutSet {
  LinOpPtr A;
  Vector b;
};

/// min R(x) + F(x) subject to A x = b^delta.
struct ProblemSpec {
  LinOpPtr A;
  Vector b_delta;
  RegularizerPtr R;
  std::optional<SmoothTerm> F;
  std::optional<SaddleCertificate> cert;
  std::optional<Vector> b_star;  // exact data when known without a full certificate
  std::optional<Vector> x_true;  // support reference for F1
  std::optional<HoldoutSet> holdout;
  double delta = 0.0;
  std::optional<double> A_norm;  // overrides the operator-norm estimate

  double operator_norm() const;
};

}  // namespace iterreg

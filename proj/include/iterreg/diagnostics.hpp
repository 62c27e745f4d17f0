#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "iterreg/problem.hpp"

namespace iterreg {

struct SolverConfig;

/// Throws CertificateError unless ||A x* - b*|| <= 1e-8 and the inclusion
/// -A* y* - grad F(x*) in dR(x*) holds up to a Fenchel residual of 1e-6.
void verify_certificate(const ProblemSpec& problem, const SaddleCertificate& cert);

/// Fenchel residual of the inclusion -A* y* - grad F(x*) in dR(x*).
double optimality_residual(const ProblemSpec& problem, const SaddleCertificate& cert);

/// L(x, y*) - L(x*, y) = R(x) + F(x) - R(x*) - F(x*) + <y*, A x - b*>.
/// Does not depend on y because A x* = b*.
double lagrangian_gap(const ProblemSpec& problem, const SaddleCertificate& cert, ConstSpan x);

/// D(x, x*) of R + F with subgradient -A* y*.
double bregman_divergence(const ProblemSpec& problem, const SaddleCertificate& cert, ConstSpan x);

/// sum_i |x_i| - |x*_i| + (A*y*)_i (x_i - x*_i).
double bregman_l1(ConstSpan x, ConstSpan x_star, ConstSpan Aty_star);

struct ExtendedSupportReport {
  std::vector<std::size_t> gamma;  // saturated indices
  double m = 0.0;                  // saturation gap: largest magnitude off gamma
  Vector magnitudes;               // |(A* y*)_i|
};

ExtendedSupportReport extended_support(ConstSpan Aty_star, double tol_sat = 1e-9);

struct CSConstants {
  std::size_t s = 0;
  double theta_s = 0.0;
  double theta_ss = 0.0;
  double theta_s2s = 0.0;
  double W = 0.0;
  double M = 0.0;
  double Q = 1.0;
  bool exact = true;  // false: Monte-Carlo lower bounds

  bool valid() const { return theta_s + theta_ss + theta_s2s < 1.0; }
};

/// Fills W, M, Q from the three restricted constants.
CSConstants cs_constants(std::size_t s, double theta_s, double theta_ss, double theta_s2s, bool exact = true);

enum class RipMode { exact, montecarlo };

/// Restricted isometry / orthogonality constants. Exact mode enumerates all
/// supports and is limited to d <= 20, s <= 3.
CSConstants estimate_rip_constants(const Matrix& A, std::size_t s, RipMode mode, std::size_t samples = 0,
                                   std::uint64_t seed = 0);

struct BoundConstants {
  std::array<double, 10> C{};  // C[0] .. C[9]
  double V0 = 0.0;
  bool has_feasibility = false;
};

/// Constants of the gap and feasibility bounds. C5..C9 need rho > 0.
BoundConstants compute_bound_constants(const SaddleCertificate& cert, const SolverConfig& config, ConstSpan x0,
                                       ConstSpan y0, double C0, bool with_feasibility = true);

struct TheoreticalBounds {
  double gap = 0.0;
  double feas = 0.0;  // bound on the squared feasibility
};

TheoreticalBounds theoretical_bounds(const BoundConstants& c, double k, double delta);

/// Q ||A x - b*|| + (1 + Q ||A||)/(1 - M) D(x, x*).
double recovery_bound(const CSConstants& cs, double A_norm, double feas, double breg);

/// F1 score of the support of x_est against the support of x_true.
double f1_support(ConstSpan x_est, ConstSpan x_true, double zero_tol = 1e-9);

std::size_t support_size(ConstSpan x, double zero_tol = 1e-9);

}  // namespace iterreg

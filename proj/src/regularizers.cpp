#include "iterreg/regularizers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <numeric>

#include "iterreg/errors.hpp"
#include "iterreg/log.hpp"

namespace iterreg {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
// slack on conjugate-domain membership tests
constexpr double dom_tol = 1e-9;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> as_eigen(const Matrix& M) {
  return {M.data(), static_cast<Eigen::Index>(M.rows()), static_cast<Eigen::Index>(M.cols())};
}

Eigen::BDCSVD<RowMat> checked_svd(const Matrix& V) {
  if (!all_finite(V.values())) throw NumericalError("SVD of a non-finite matrix", 0);
  Eigen::BDCSVD<RowMat> svd(as_eigen(V), Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("SVD failed to converge", 0);
  return svd;
}

void check_dims(ConstSpan v, const DiagMetric& T, MutSpan out) {
  if (v.size() != T.size() || out.size() != v.size())
    throw ConfigError("prox: dimension mismatch between input, metric and output");
}

class L1 final : public Regularizer {
 public:
  RegKind kind() const override { return RegKind::l1; }
  double value(ConstSpan x) const override { return norm1(x); }
  double conjugate(ConstSpan g) const override { return norm_inf(g) <= 1.0 + dom_tol ? 0.0 : inf; }
  void prox(ConstSpan v, const DiagMetric& T, MutSpan out) const override {
    check_dims(v, T, out);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], T[i]);
  }
  void project_conjugate_domain(MutSpan g) const override {
    for (double& e : g) e = std::clamp(e, -1.0, 1.0);
  }
};

class GroupL21 final : public Regularizer {
 public:
  GroupL21(std::size_t n_groups, std::size_t group_size, GroupLayout layout)
      : n_(n_groups), m_(group_size), layout_(layout) {
    if (n_ == 0 || m_ == 0) throw ConfigError("group_l21: groups must be nonempty");
  }
  RegKind kind() const override { return RegKind::group_l21; }

  double value(ConstSpan x) const override {
    check(x.size());
    double s = 0.0;
    for (std::size_t g = 0; g < n_; ++g) s += std::sqrt(group_sq(x, g));
    return s;
  }

  double conjugate(ConstSpan g) const override {
    check(g.size());
    for (std::size_t k = 0; k < n_; ++k)
      if (std::sqrt(group_sq(g, k)) > 1.0 + dom_tol) return inf;
    return 0.0;
  }

  void prox(ConstSpan v, const DiagMetric& T, MutSpan out) const override {
    check_dims(v, T, out);
    check(v.size());
    std::vector<double> vg(m_), tg(m_);
    for (std::size_t g = 0; g < n_; ++g) {
      for (std::size_t j = 0; j < m_; ++j) {
        vg[j] = v[idx(g, j)];
        tg[j] = T[idx(g, j)];
      }
      const double scale = shrink_radius(vg, tg);
      for (std::size_t j = 0; j < m_; ++j) {
        // x_j = v_j r / (t_j + r); r = 0 means the whole group is zeroed
        out[idx(g, j)] = scale > 0.0 ? vg[j] * scale / (tg[j] + scale) : 0.0;
      }
    }
  }

  void project_conjugate_domain(MutSpan g) const override {
    check(g.size());
    for (std::size_t k = 0; k < n_; ++k) {
      const double nrm = std::sqrt(group_sq(g, k));
      if (nrm > 1.0)
        for (std::size_t j = 0; j < m_; ++j) g[idx(k, j)] /= nrm;
    }
  }

 private:
  std::size_t idx(std::size_t g, std::size_t j) const {
    return layout_ == GroupLayout::contiguous ? g * m_ + j : g + j * n_;
  }
  double group_sq(ConstSpan x, std::size_t g) const {
    double s = 0.0;
    for (std::size_t j = 0; j < m_; ++j) s += x[idx(g, j)] * x[idx(g, j)];
    return s;
  }
  void check(std::size_t n) const {
    if (n != n_ * m_) throw ConfigError("group_l21: expected " + std::to_string(n_ * m_) + " entries");
  }

  // Norm r of the prox output: root of sum_j v_j^2 / (t_j + r)^2 = 1, or 0
  // when sum_j v_j^2 / t_j^2 <= 1.
  static double shrink_radius(const std::vector<double>& v, const std::vector<double>& t) {
    double phi0 = 0.0, vn = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      phi0 += v[j] * v[j] / (t[j] * t[j]);
      vn += v[j] * v[j];
    }
    if (phi0 <= 1.0) return 0.0;
    vn = std::sqrt(vn);
    if (std::all_of(t.begin(), t.end(), [&](double e) { return e == t[0]; })) return vn - t[0];
    // phi is convex and decreasing, so Newton from r = 0 climbs monotonically to the root.
    double r = 0.0;
    for (int it = 0; it < 200; ++it) {
      double phi = 0.0, dphi = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        const double s = t[j] + r;
        phi += v[j] * v[j] / (s * s);
        dphi -= 2.0 * v[j] * v[j] / (s * s * s);
      }
      const double next = std::min(vn, r - (phi - 1.0) / dphi);
      if (!(next > r) || next - r <= 1e-16 * next) {
        r = std::max(r, next);
        break;
      }
      r = next;
    }
    return r;
  }

  std::size_t n_, m_;
  GroupLayout layout_;
};

class Nuclear final : public Regularizer {
 public:
  Nuclear(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}
  RegKind kind() const override { return RegKind::nuclear; }
  double value(ConstSpan x) const override { return nuclear_norm(reshape(x)); }
  double conjugate(ConstSpan g) const override { return spectral_norm(reshape(g)) <= 1.0 + dom_tol ? 0.0 : inf; }
  void prox(ConstSpan v, const DiagMetric& T, MutSpan out) const override {
    check_dims(v, T, out);
    if (!T.is_scalar()) throw ConfigError("nuclear prox requires a scalar metric");
    const Matrix P = nuclear_prox(reshape(v), T[0]);
    std::copy(P.values().begin(), P.values().end(), out.begin());
  }
  void project_conjugate_domain(MutSpan g) const override {
    const Matrix G = reshape(g);
    auto svd = checked_svd(G);
    Eigen::VectorXd s = svd.singularValues().cwiseMin(1.0);
    RowMat P = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    std::copy(P.data(), P.data() + P.size(), g.begin());
  }

 private:
  Matrix reshape(ConstSpan x) const {
    if (x.size() != rows_ * cols_) throw ConfigError("nuclear: expected " + std::to_string(rows_ * cols_) + " entries");
    return Matrix(rows_, cols_, Vector(x.begin(), x.end()));
  }
  std::size_t rows_, cols_;
};

class Nonneg final : public Regularizer {
 public:
  RegKind kind() const override { return RegKind::nonneg_indicator; }
  double value(ConstSpan x) const override {
    return std::all_of(x.begin(), x.end(), [](double e) { return e >= 0.0; }) ? 0.0 : inf;
  }
  double conjugate(ConstSpan g) const override {
    return std::all_of(g.begin(), g.end(), [](double e) { return e <= dom_tol; }) ? 0.0 : inf;
  }
  void prox(ConstSpan v, const DiagMetric& T, MutSpan out) const override {
    check_dims(v, T, out);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i], 0.0);
  }
  void project_conjugate_domain(MutSpan g) const override {
    for (double& e : g) e = std::min(e, 0.0);
  }
  void project_primal_domain(MutSpan x) const override {
    for (double& e : x) e = std::max(e, 0.0);
  }
};

class SqL2 final : public Regularizer {
 public:
  RegKind kind() const override { return RegKind::sq_l2; }
  double value(ConstSpan x) const override { return 0.5 * sq_norm(x); }
  double conjugate(ConstSpan g) const override { return 0.5 * sq_norm(g); }
  void prox(ConstSpan v, const DiagMetric& T, MutSpan out) const override {
    check_dims(v, T, out);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / (1.0 + T[i]);
  }
  void project_conjugate_domain(MutSpan) const override {}
};

class Zero final : public Regularizer {
 public:
  RegKind kind() const override { return RegKind::zero; }
  double value(ConstSpan) const override { return 0.0; }
  double conjugate(ConstSpan g) const override { return norm_inf(g) <= dom_tol ? 0.0 : inf; }
  void prox(ConstSpan v, const DiagMetric& T, MutSpan out) const override {
    check_dims(v, T, out);
    std::copy(v.begin(), v.end(), out.begin());
  }
  void project_conjugate_domain(MutSpan g) const override { std::fill(g.begin(), g.end(), 0.0); }
};

class SeparableSum final : public Regularizer {
 public:
  explicit SeparableSum(std::vector<RegularizerBlock> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw ConfigError("separable_sum: no blocks");
    for (const auto& b : blocks_)
      if (!b.reg) throw ConfigError("separable_sum: null regularizer");
  }
  RegKind kind() const override { return RegKind::separable_sum; }

  double value(ConstSpan x) const override {
    check(x.size());
    double s = 0.0;
    std::size_t off = 0;
    for (const auto& b : blocks_) {
      s += b.reg->value(x.subspan(off, b.length));
      off += b.length;
    }
    return s;
  }
  double conjugate(ConstSpan g) const override {
    check(g.size());
    double s = 0.0;
    std::size_t off = 0;
    for (const auto& b : blocks_) {
      s += b.reg->conjugate(g.subspan(off, b.length));
      off += b.length;
    }
    return s;
  }
  void prox(ConstSpan v, const DiagMetric& T, MutSpan out) const override {
    check_dims(v, T, out);
    check(v.size());
    std::size_t off = 0;
    for (const auto& b : blocks_) {
      b.reg->prox(v.subspan(off, b.length), T.slice(off, b.length), out.subspan(off, b.length));
      off += b.length;
    }
  }
  void project_conjugate_domain(MutSpan g) const override {
    std::size_t off = 0;
    for (const auto& b : blocks_) {
      b.reg->project_conjugate_domain(g.subspan(off, b.length));
      off += b.length;
    }
  }
  void project_primal_domain(MutSpan x) const override {
    std::size_t off = 0;
    for (const auto& b : blocks_) {
      b.reg->project_primal_domain(x.subspan(off, b.length));
      off += b.length;
    }
  }

 private:
  void check(std::size_t n) const {
    std::size_t total = 0;
    for (const auto& b : blocks_) total += b.length;
    if (n != total) throw ConfigError("separable_sum: expected " + std::to_string(total) + " entries");
  }
  std::vector<RegularizerBlock> blocks_;
};

}  // namespace

DiagMetric::DiagMetric(Vector diag) : d_(std::move(diag)) {
  if (d_.empty()) throw ConfigError("DiagMetric: empty diagonal");
  for (double e : d_)
    if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("DiagMetric: entries must be positive and finite");
  auto [lo, hi] = std::minmax_element(d_.begin(), d_.end());
  min_ = *lo;
  max_ = *hi;
}

DiagMetric DiagMetric::scalar(std::size_t n, double value) { return DiagMetric(Vector(n, value)); }

DiagMetric DiagMetric::slice(std::size_t offset, std::size_t len) const {
  return DiagMetric(Vector(d_.begin() + offset, d_.begin() + offset + len));
}

double DiagMetric::sq_norm_inv(ConstSpan x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * x[i] / d_[i];
  return s;
}

std::string to_string(RegKind kind) {
  switch (kind) {
    case RegKind::l1: return "l1";
    case RegKind::group_l21: return "group_l21";
    case RegKind::nuclear: return "nuclear";
    case RegKind::nonneg_indicator: return "nonneg_indicator";
    case RegKind::sq_l2: return "sq_l2";
    case RegKind::zero: return "zero";
    case RegKind::separable_sum: return "separable_sum";
  }
  return "unknown";
}

Vector Regularizer::prox_diag(ConstSpan v, const DiagMetric& T) const {
  Vector out(v.size());
  prox(v, T, out);
  return out;
}

RegularizerPtr l1() { return std::make_shared<L1>(); }
RegularizerPtr group_l21(std::size_t n_groups, std::size_t group_size, GroupLayout layout) {
  return std::make_shared<GroupL21>(n_groups, group_size, layout);
}
RegularizerPtr nuclear(std::size_t rows, std::size_t cols) { return std::make_shared<Nuclear>(rows, cols); }
RegularizerPtr nonneg() { return std::make_shared<Nonneg>(); }
RegularizerPtr sq_l2() { return std::make_shared<SqL2>(); }
RegularizerPtr zero() { return std::make_shared<Zero>(); }
RegularizerPtr separable_sum(std::vector<RegularizerBlock> blocks) {
  return std::make_shared<SeparableSum>(std::move(blocks));
}

Vector l1_prox_diag(ConstSpan v, const DiagMetric& T) { return L1{}.prox_diag(v, T); }

Matrix group_l21_prox(const Matrix& V, double tau) {
  if (!(tau > 0.0)) throw ConfigError("group_l21_prox: tau must be positive");
  Matrix out(V.rows(), V.cols());
  for (std::size_t r = 0; r < V.rows(); ++r) {
    const double nrm = norm2(V.row(r));
    const double f = nrm > tau ? 1.0 - tau / nrm : 0.0;
    for (std::size_t c = 0; c < V.cols(); ++c) out(r, c) = f * V(r, c);
  }
  return out;
}

Matrix nuclear_prox(const Matrix& V, double tau) {
  if (!(tau > 0.0)) throw ConfigError("nuclear_prox: tau must be positive");
  if (V.size() == 0) return V;
  auto svd = checked_svd(V);
  Eigen::VectorXd s = (svd.singularValues().array() - tau).cwiseMax(0.0).matrix();
  RowMat P = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  return Matrix(V.rows(), V.cols(), Vector(P.data(), P.data() + P.size()));
}

Vector nonneg_prox(ConstSpan v, const DiagMetric& T) { return Nonneg{}.prox_diag(v, T); }

double nuclear_norm(const Matrix& V) {
  if (V.size() == 0) return 0.0;
  return checked_svd(V).singularValues().sum();
}

double spectral_norm(const Matrix& V) {
  if (V.size() == 0) return 0.0;
  const auto s = checked_svd(V).singularValues();
  return s.size() ? s(0) : 0.0;
}

double epsilon_certificate(const Regularizer& R, ConstSpan input, ConstSpan output, const DiagMetric& T) {
  if (input.size() != output.size() || input.size() != T.size())
    throw ConfigError("epsilon_certificate: dimension mismatch");
  Vector g(input.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (input[i] - output[i]) / T[i];
  const double rstar = R.conjugate(g);
  const double r = R.value(output);
  if (!std::isfinite(rstar) || !std::isfinite(r)) return inf;
  return std::max(0.0, r + rstar - dot(g, output));
}

double ProxErrorSchedule::budget(std::size_t) const {
  switch (mode) {
    case Mode::exact: return 0.0;
    case Mode::constant: return C0;
    case Mode::noise_proportional: return C0 * delta;
  }
  return 0.0;
}

InexactProxResult inexact_prox(const Regularizer& R, ConstSpan v, const DiagMetric& T,
                               const ProxErrorSchedule& schedule, std::size_t k, std::mt19937_64& rng) {
  InexactProxResult res;
  res.x = R.prox_diag(v, T);
  const double B = schedule.budget(k);
  if (schedule.mode == ProxErrorSchedule::Mode::exact || !(B > 0.0)) return res;

  const std::size_t n = v.size();
  std::normal_distribution<double> normal;
  Vector d(n);
  for (double& e : d) e = normal(rng);
  const double dn = norm2(d);
  if (dn == 0.0) return res;
  for (double& e : d) e /= dn;

  // Perturb, then pull the implied subgradient back into dom R* and the
  // point back into dom R so that the certificate stays finite.
  Vector cand(n), g(n);
  auto evaluate = [&](double mag) {
    for (std::size_t i = 0; i < n; ++i) g[i] = (v[i] - (res.x[i] + mag * d[i])) / T[i];
    R.project_conjugate_domain(g);
    for (std::size_t i = 0; i < n; ++i) cand[i] = v[i] - T[i] * g[i];
    R.project_primal_domain(cand);
    return epsilon_certificate(R, v, cand, T);
  };

  double lo = 0.0, hi = inf;
  double mag = std::sqrt(B * T.tau_max());
  double best_eps = 0.0;
  Vector best;
  for (int step = 0; step < 50; ++step) {
    const double eps = evaluate(mag);
    if (eps > 0.0 && eps <= B && eps > best_eps) {
      best_eps = eps;
      best = cand;
      if (eps >= 0.25 * B) break;
    }
    if (eps > B)
      hi = mag;
    else
      lo = mag;
    mag = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * mag;
  }
  if (best.empty()) {
    log::warn("inexact_prox: no certified perturbation found; using the exact prox");
    res.fell_back = true;
    return res;
  }
  res.x = std::move(best);
  res.epsilon = best_eps;
  return res;
}

}  // namespace iterreg

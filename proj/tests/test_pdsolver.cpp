#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "iterreg/datagen.hpp"
#include "iterreg/diagnostics.hpp"
#include "iterreg/errors.hpp"
#include "iterreg/pdsolver.hpp"

using namespace iterreg;
using testutil::randn;

namespace {

SolverConfig scalar_config(std::size_t d, std::size_t n, double tau, double sigma, std::size_t iters) {
  SolverConfig c;
  c.T = DiagMetric::scalar(d, tau);
  c.Sigma = DiagMetric::scalar(n, sigma);
  c.max_iters = iters;
  return c;
}

ProblemSpec scalar_problem(RegularizerPtr R) {
  ProblemSpec p;
  p.A = std::make_shared<DenseOp>(Matrix(1, 1, Vector{1.0}));
  p.b_delta = {1.0};
  p.R = std::move(R);
  return p;
}

// sigma = tau = sqrt(0.99)/||A||
SolverConfig symmetric_config(const ProblemSpec& p, std::size_t iters) {
  const double s = std::sqrt(0.99) / p.operator_norm();
  return scalar_config(p.A->in_dim(), p.A->out_dim(), s, s, iters);
}

}  // namespace

TEST_CASE("validate_params examples") {
  const double A_norm = 2.0;
  const double s = std::sqrt(0.99) / A_norm;
  const auto T = DiagMetric::scalar(3, s), S = DiagMetric::scalar(2, s);
  const ParamConstants c = validate_params(A_norm, 0.0, T, S, 0.25, 1.5, false);
  CHECK(c.omega == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(c.rho == doctest::Approx(s / 8).epsilon(1e-12));
  CHECK(c.theta == doctest::Approx(0.25 - 0.99).epsilon(1e-12));

  // theta < 0 only matters under strict validation
  CHECK_THROWS_AS(validate_params(A_norm, 0.0, T, S, 0.25, 1.5, true), StrictConfigError);

  const double L = 1.0, sig = 0.3;
  const auto Tbad = DiagMetric::scalar(3, 2.0 / (L + sig * A_norm * A_norm));
  CHECK_THROWS_AS(validate_params(A_norm, L, Tbad, DiagMetric::scalar(2, sig), 0.25, 1.5, false), ConfigError);

  CHECK_THROWS_AS(validate_params(1.0, 0.0, T, S, 1.0, 1.5, false), ConfigError);
  CHECK_THROWS_AS(validate_params(1.0, 0.0, T, S, 0.25, 1.0, false), ConfigError);
  CHECK_THROWS_AS(validate_params(-1.0, 0.0, T, S, 0.25, 1.5, false), ConfigError);

  SUBCASE("strict passes with a small step product") {
    const auto t = DiagMetric::scalar(3, 0.1), sg = DiagMetric::scalar(2, 0.1);
    const ParamConstants p = validate_params(1.0, 0.0, t, sg, 0.25, 1.5, true);
    CHECK(p.theta == doctest::Approx(0.25 - 0.01));
    CHECK(p.rho == doctest::Approx(0.1 / 8));
  }
}

TEST_CASE("datadriven_sigma") {
  SUBCASE("max-abs arithmetic") {
    DenseOp A(Matrix::identity(2));
    const StepSizes st = datadriven_sigma(A, Vector{2.0, -4.0}, 1.0);
    CHECK(st.sigma == 0.25);
    CHECK(!st.degenerate);
    const ParamConstants c =
        validate_params(1.0, 0.0, DiagMetric::scalar(2, st.tau), DiagMetric::scalar(2, st.sigma), 0.25, 1.5, false);
    CHECK(c.omega == doctest::Approx(0.01).epsilon(1e-12));
  }
  SUBCASE("omega = 0.01 on random operators") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 5; ++t) {
      const Matrix M = randn(8, 13, rng);
      DenseOp A(M);
      const double nA = testutil::svd_norm(M);
      const StepSizes st = datadriven_sigma(A, randn(8, rng), nA);
      CHECK(st.sigma * st.tau * nA * nA == doctest::Approx(0.99).epsilon(1e-14));
    }
  }
  SUBCASE("smaller than the symmetric choice on the 200x500 instance") {
    const SparseInstance inst = sparse_instance(200, 500, 0.2, 0.04, 10.0, 1);
    DenseOp A(inst.A);
    const double nA = operator_norm(A);
    const StepSizes st = datadriven_sigma(A, inst.b_delta, nA);
    CHECK(st.sigma < std::sqrt(0.99) / nA);
  }
  SUBCASE("degenerate data falls back") {
    DenseOp A(Matrix::identity(2));
    const StepSizes st = datadriven_sigma(A, Vector{0.0, 0.0}, 2.0);
    CHECK(st.degenerate);
    CHECK(st.sigma == doctest::Approx(0.495));
    CHECK(st.tau == st.sigma);
  }
}

TEST_CASE("pock_chambolle_precond") {
  SUBCASE("identity") {
    const Matrix I = Matrix::identity(3);
    CHECK_THROWS_AS(pock_chambolle_precond(I, 1.0), StrictConfigError);
    PrecondOptions raw;
    raw.check = false;
    const Preconditioners p = pock_chambolle_precond(I, 1.0, raw);
    CHECK(p.T.diag() == Vector{1, 1, 1});
    CHECK(p.Sigma.diag() == Vector{3, 3, 3});

    PrecondOptions scaled_opts;
    scaled_opts.auto_scale = true;
    const Preconditioners q = pock_chambolle_precond(I, 1.0, scaled_opts);
    CHECK(q.T.tau_max() * q.Sigma.tau_max() == doctest::Approx(0.99));
    CHECK(q.Sigma.diag() == Vector{3, 3, 3});
  }
  SUBCASE("columns x2 quadruple T") {
    std::mt19937_64 rng(8);
    const Matrix A = randn(5, 4, rng);
    Matrix A2 = A;
    for (double& e : A2.values()) e *= 2.0;
    PrecondOptions raw;
    raw.check = false;
    const auto p1 = pock_chambolle_precond(A, 0.7, raw), p2 = pock_chambolle_precond(A2, 0.7, raw);
    for (std::size_t j = 0; j < 4; ++j) CHECK(p2.T[j] == doctest::Approx(4 * p1.T[j]).epsilon(1e-14));
    CHECK(p1.Sigma.diag() == p2.Sigma.diag());
  }
  SUBCASE("scaled Toeplitz columns give a non-scalar T") {
    Matrix A = toeplitz_design(50, 100, 0.5, 2);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(1.0, 5.0);
    for (std::size_t j = 0; j < A.cols(); ++j) {
      const double c = u(rng);
      for (std::size_t i = 0; i < A.rows(); ++i) A(i, j) *= c;
    }
    PrecondOptions o;
    o.auto_scale = true;
    const auto p = pock_chambolle_precond(A, 1.0, o);
    CHECK(p.T.tau_max() / p.T.tau_min() > 1.0);
    CHECK(!p.T.is_scalar());
    PrecondOptions inv = o;
    inv.inverse_columns = true;
    const auto pi = pock_chambolle_precond(A, 1.0, inv);
    CHECK(pi.T.tau_max() * pi.Sigma.tau_max() * std::pow(operator_norm(DenseOp(A)), 2) ==
          doctest::Approx(0.99).epsilon(1e-10));
  }
  SUBCASE("zero column") {
    Matrix A(2, 2, Vector{1, 0, 1, 0});
    CHECK_THROWS_AS(pock_chambolle_precond(A, 1.0), ConfigError);
  }
}

TEST_CASE("pd_step hand examples") {
  for (auto R : {zero(), l1()}) {
    ProblemSpec p = scalar_problem(R);
    const SolverConfig c = scalar_config(1, 1, 0.5, 0.5, 1);
    std::mt19937_64 rng(0);
    SolverState s = pd_step(p, c, initial_state(p, c), rng);
    CHECK(s.x == Vector{0.0});
    CHECK(s.y == Vector{-0.5});
    CHECK(s.y_prev == Vector{0.0});
    CHECK(s.k == 1);
    // second step: y~ = -1, x = prox(0.5)
    s = pd_step(p, c, std::move(s), rng);
    CHECK(s.x[0] == (R->kind() == RegKind::l1 ? 0.0 : 0.5));
  }
}

TEST_CASE("pd_step reports non-finite iterates") {
  ProblemSpec p = scalar_problem(zero());
  p.b_delta = {std::nan("")};
  const SolverConfig c = scalar_config(1, 1, 0.5, 0.5, 5);
  std::mt19937_64 rng(0);
  try {
    pd_step(p, c, initial_state(p, c), rng);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.iteration() == 1);
  }
  CHECK_THROWS_AS(run(p, c), NumericalError);
}

TEST_CASE("dual update in prox form matches the explicit formula") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + t % 7;
    const Vector y = randn(n, rng), ax = randn(n, rng), b = randn(n, rng);
    Vector sd = randn(n, rng);
    for (double& e : sd) e = std::abs(e) + 0.01;
    const DiagMetric S(sd);
    Vector explicit_form(n);
    for (std::size_t i = 0; i < n; ++i) explicit_form[i] = y[i] + S[i] * (ax[i] - b[i]);
    CHECK(testutil::max_abs_diff(dual_update_prox_form(y, S, ax, b), explicit_form) <= 1e-12);
  }
}

TEST_CASE("running sums equal post-hoc averages") {
  const CertifiedInstance ci = certified_instance(20, 40, 3, 5);
  const ProblemSpec p = certified_problem(ci, ci.inst.b_star, 0.0);
  const SolverConfig c = symmetric_config(p, 1000);
  Vector xs(40, 0.0), ys(20, 0.0);
  std::size_t count = 0;
  double worst = 0.0;
  run(p, c, stopping::MaxIters{}, [&](const SolverState& s) {
    axpy(1.0, s.x, xs);
    axpy(1.0, s.y, ys);
    ++count;
    const Vector xa = scaled(1.0 / count, xs), ya = scaled(1.0 / count, ys);
    worst = std::max({worst, testutil::max_abs_diff(xa, s.x_avg()), testutil::max_abs_diff(ya, s.y_avg())});
  });
  CHECK(count == 1000);
  CHECK(worst <= 1e-12);
}

TEST_CASE("run stopping rules") {
  CHECK(fixed_k_iterations(1.0, 0.01) == 100);
  CHECK(fixed_k_iterations(0.3, 0.1) == 3);
  CHECK_THROWS_AS(fixed_k_iterations(1.0, 0.0), ConfigError);

  const CertifiedInstance ci = certified_instance(20, 40, 3, 5);
  const ProblemSpec p = certified_problem(ci, ci.inst.b_star, 0.0);
  SolverConfig c = symmetric_config(p, 1000);

  const RunResult r = run(p, c, stopping::FixedK{1.0, 0.01});
  CHECK(r.stopped_at == 100);
  CHECK(r.log.rows.back().k == 100);
  CHECK_THROWS_AS(run(p, c, stopping::FixedK{1.0, 0.0}), ConfigError);

  c.max_iters = 0;
  const RunResult r0 = run(p, c);
  CHECK(r0.stopped_at == 0);
  CHECK(r0.state.x == Vector(40, 0.0));
  CHECK(r0.state.y == Vector(20, 0.0));
  CHECK(r0.log.rows.empty());

  CHECK_THROWS_AS(run(p, c, stopping::HoldoutCv{}), ConfigError);
}

TEST_CASE("log cadence and CSV") {
  const CertifiedInstance ci = certified_instance(10, 20, 2, 3);
  const ProblemSpec p = certified_problem(ci, ci.inst.b_star, 0.0);
  SolverConfig c = symmetric_config(p, 1200);
  RunResult r = run(p, c);
  CHECK(r.log.rows.size() == 1000 + 20);
  c.log_every = 7;
  c.max_iters = 30;
  r = run(p, c);
  CHECK(r.log.rows.size() == 5);  // 7, 14, 21, 28, 30
  CHECK(r.log.rows.back().k == 30);
  std::ostringstream os;
  r.log.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("k,feasibility,lagrangian_gap,bregman_l1,l1_norm,support_size,f1,holdout_mse,epsilon_k,elapsed_ms\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  // holdout column is empty without a holdout set
  CHECK(csv.find(",,") != std::string::npos);
}

TEST_CASE("certified noiseless instance converges") {
  const CertifiedInstance ci = certified_instance(20, 40, 3, 11);
  const ProblemSpec p = certified_problem(ci, ci.inst.b_star, 0.0);
  SolverConfig c = symmetric_config(p, 10000);
  c.log_every = 500;

  std::optional<double> feas500;
  const RunResult r = run(p, c, stopping::MaxIters{}, [&](const SolverState& s) {
    if (s.k == 500) feas500 = norm2(sub(s.ax, ci.cert.b_star));
  });
  REQUIRE(feas500);
  // last iterates; the averaged ones decay like 1/k and sit near 1e-4 here
  CHECK(*feas500 <= 1e-5);
  CHECK(norm2(sub(r.state.x, ci.cert.x_star)) <= 1e-4);

  // averaged feasibility still decreases along the log
  const auto& rows = r.log.rows;
  CHECK(*rows.back().feasibility < *rows.front().feasibility);
  CHECK(*rows.back().lagrangian_gap < *rows.front().lagrangian_gap);
}

TEST_CASE("inexact prox with noise-proportional budget stays close to the exact run") {
  const CertifiedInstance ci = certified_instance(20, 40, 3, 13);
  const double delta = 0.05;
  const Vector bd = add_noise(ci.inst.b_star, delta, 4);
  const ProblemSpec p = certified_problem(ci, bd, delta);
  SolverConfig c = symmetric_config(p, 0);
  c.metrics_on = SolverConfig::MetricsOn::last;
  const stopping::FixedK rule{2.0, delta};

  const RunResult exact = run(p, c, rule);
  c.schedule.mode = ProxErrorSchedule::Mode::noise_proportional;
  c.schedule.C0 = 1.0;
  c.schedule.delta = delta;
  const RunResult inexact = run(p, c, rule);

  CHECK(exact.stopped_at == 40);
  CHECK(inexact.stopped_at == 40);
  for (double e : inexact.epsilons) CHECK(e <= delta + 1e-15);
  const double e0 = norm2(sub(exact.state.x_avg(), ci.cert.x_star));
  const double e1 = norm2(sub(inexact.state.x_avg(), ci.cert.x_star));
  CHECK(e1 <= 2.0 * e0);
  CHECK(e1 >= 0.5 * e0);
}

TEST_CASE("make_folds partitions the rows") {
  const SparseInstance inst = sparse_instance(23, 10, 0.2, 0.2, 10.0, 2);
  ProblemSpec p;
  p.A = std::make_shared<DenseOp>(inst.A);
  p.b_delta = inst.b_delta;
  p.R = l1();
  const auto folds = make_folds(p, 4, 9);
  REQUIRE(folds.size() == 4);
  std::size_t total = 0;
  for (const auto& f : folds) {
    CHECK(f.train.A->out_dim() + f.A_heldout->out_dim() == 23);
    total += f.b_heldout.size();
  }
  CHECK(total == 23);
  CHECK_THROWS_AS(make_folds(p, 1, 0), ConfigError);
  CHECK_THROWS_AS(make_folds(p, 24, 0), ConfigError);
}

TEST_CASE("cv_early_stop") {
  auto config_for = [](const ProblemSpec& p) {
    const StepSizes st = datadriven_sigma(*p.A, p.b_delta, p.operator_norm());
    return scalar_config(p.A->in_dim(), p.A->out_dim(), st.tau, st.sigma, 0);
  };
  auto problem_of = [](const SparseInstance& inst, bool noisy) {
    ProblemSpec p;
    p.A = std::make_shared<DenseOp>(inst.A);
    p.b_delta = noisy ? inst.b_delta : inst.b_star;
    p.R = l1();
    return p;
  };

  SUBCASE("noiseless: best_k = max_iters") {
    const SparseInstance inst = sparse_instance(200, 100, 0.2, 0.05, 10.0, 4);
    const auto folds = make_folds(problem_of(inst, false), 4, 1);
    const CvResult cv = cv_early_stop(folds, config_for, 300);
    CHECK(cv.best_k == 300);
    CHECK(cv.mean_mse.back() <= 1e-3 * cv.mean_mse.front());
  }
  SUBCASE("noisy 200x500: interior best_k") {
    const SparseInstance inst = sparse_instance(200, 500, 0.2, 0.04, 10.0, 5);
    const auto folds = make_folds(problem_of(inst, true), 4, 1);
    const CvResult cv = cv_early_stop(folds, config_for, 300);
    CHECK(cv.best_k > 1);
    CHECK(cv.best_k < 300);
  }
  SUBCASE("identical folds agree with the single-fold argmin") {
    const SparseInstance inst = sparse_instance(60, 80, 0.2, 0.05, 5.0, 6);
    const auto folds = make_folds(problem_of(inst, true), 3, 2);
    const CvResult two = cv_early_stop({folds[0], folds[0]}, config_for, 200);
    ProblemSpec p = folds[0].train;
    p.holdout = HoldoutSet{folds[0].A_heldout, folds[0].b_heldout};
    SolverConfig c = config_for(p);
    c.max_iters = 200;
    const RunResult single = run(p, c);
    REQUIRE(single.best_k);
    CHECK(two.best_k == *single.best_k);
    CHECK(two.fold_mse[0] == two.fold_mse[1]);
  }
  SUBCASE("errors") {
    const SparseInstance inst = sparse_instance(20, 10, 0.2, 0.2, 10.0, 1);
    const auto folds = make_folds(problem_of(inst, true), 2, 1);
    CHECK_THROWS_AS(cv_early_stop({folds[0]}, config_for, 10), ConfigError);
    auto broken = folds;
    broken[1].b_heldout.clear();
    CHECK_THROWS_AS(cv_early_stop(broken, config_for, 10), ConfigError);
  }
}

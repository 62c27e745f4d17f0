#include <doctest.h>

#include "helpers.hpp"
#include "iterreg/errors.hpp"
#include "iterreg/kernels.hpp"
#include "iterreg/linops.hpp"

using namespace iterreg;
using testutil::randn;

namespace {

// Worst relative violation of <Ax, y> = <x, A*y> over `pairs` random pairs.
double adjoint_defect(const LinOp& op, int pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < pairs; ++t) {
    const Vector x = randn(op.in_dim(), rng), y = randn(op.out_dim(), rng);
    const Vector Ax = op.apply(x), Aty = op.adjoint(y);
    const double lhs = dot(Ax, y), rhs = dot(x, Aty);
    worst = std::max(worst, std::abs(lhs - rhs) / (norm2(Ax) * norm2(y) + 1.0));
  }
  return worst;
}

}  // namespace

TEST_CASE("kernels: omp and serial gemv agree bitwise") {
  std::mt19937_64 rng(1);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{3, 5}, {257, 513}, {600, 300}}) {
    const Matrix A = randn(m, n, rng);
    const Vector x = randn(n, rng), y = randn(m, rng);
    Vector a(m), b(m), c(n), d(n);
    kernels::serial::gemv(A, x, a);
    kernels::omp::gemv(A, x, b);
    kernels::serial::gemv_t(A, y, c);
    kernels::omp::gemv_t(A, y, d);
    CHECK(a == b);
    CHECK(c == d);
  }
}

TEST_CASE("power_iteration_norm") {
  SUBCASE("identity") { CHECK(power_iteration_norm(IdentityOp(5), 50, 3) == doctest::Approx(1.0).epsilon(1e-14)); }
  SUBCASE("diagonal") {
    CHECK(power_iteration_norm(DiagonalOp({3.0, 1.0, 0.5}), 200, 3) == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("gaussian 10x20 against SVD") {
    std::mt19937_64 rng(7);
    const Matrix A = randn(10, 20, rng);
    const double est = power_iteration_norm(DenseOp(A), 2000, 11);
    const double ref = testutil::svd_norm(A);
    CHECK(std::abs(est - ref) / ref <= 1e-6);
    CHECK(est <= ref * (1 + 1e-12));
  }
  SUBCASE("zero operator") { CHECK(power_iteration_norm(ZeroOp(4, 3), 10, 1) == 0.0); }
  SUBCASE("deterministic") {
    std::mt19937_64 rng(2);
    DenseOp A(randn(6, 9, rng));
    CHECK(power_iteration_norm(A, 5, 42) == power_iteration_norm(A, 5, 42));
  }
  SUBCASE("iters must be positive") { CHECK_THROWS_AS(power_iteration_norm(IdentityOp(2), 0, 1), ConfigError); }
}

TEST_CASE("masking_op") {
  MaskingOp M(2, 2, {{0, 0}});
  const Vector X{5, 1, 2, 3};
  CHECK(M.apply(X) == Vector{5, 0, 0, 0});
  CHECK(*M.norm_hint() == 1.0);

  std::mt19937_64 rng(5);
  MaskingOp M4(4, 4, {{0, 1}, {2, 2}, {3, 0}, {1, 3}, {1, 1}});
  for (int t = 0; t < 10; ++t) {
    const Vector x = randn(16, rng), y = randn(16, rng);
    const Vector once = M4.apply(x);
    CHECK(M4.apply(once) == once);  // idempotent, bitwise
    CHECK(std::abs(dot(M4.apply(x), y) - dot(x, M4.apply(y))) <= 1e-12);
    CHECK(M4.adjoint(y) == M4.apply(y));
  }

  MaskingOp empty(3, 3, {});
  CHECK(*empty.norm_hint() == 0.0);
  CHECK(norm_inf(empty.apply(randn(9, rng))) == 0.0);
  CHECK_THROWS_AS(MaskingOp(2, 2, {{2, 0}}), ConfigError);
}

TEST_CASE("grad2d_op") {
  SUBCASE("constant image has zero gradient") {
    Grad2dOp G(4, 5);
    CHECK(norm_inf(G.apply(Vector(20, 3.7))) == 0.0);
  }
  SUBCASE("1x3 forward differences") {
    Grad2dOp G(1, 3);
    const Vector y = G.apply(Vector{0, 1, 3});
    CHECK(Vector(y.begin(), y.begin() + 3) == Vector{1, 2, 0});
    CHECK(Vector(y.begin() + 3, y.end()) == Vector{0, 0, 0});
  }
  SUBCASE("norm on 8x8 below sqrt(8)") {
    Grad2dOp G(8, 8);
    CHECK(power_iteration_norm(G, 500, 1) <= std::sqrt(8.0) + 1e-8);
  }
}

TEST_CASE("adjoint suite on shipped operators") {
  std::mt19937_64 rng(9);
  std::vector<std::shared_ptr<const LinOp>> ops{
      std::make_shared<DenseOp>(randn(7, 11, rng)),
      std::make_shared<DiagonalOp>(randn(6, rng)),
      std::make_shared<IdentityOp>(5, -2.0),
      std::make_shared<ZeroOp>(3, 4),
      std::make_shared<MaskingOp>(3, 4, std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {2, 3}, {1, 1}}),
      std::make_shared<Grad2dOp>(5, 6),
      std::make_shared<CsrOp>(3, 4, std::vector<std::size_t>{0, 2, 2, 4}, std::vector<std::size_t>{0, 3, 1, 2},
                              Vector{1.5, -2.0, 0.5, 4.0}),
  };
  ops.push_back(std::make_shared<RowSelectOp>(ops[0], std::vector<std::size_t>{0, 3, 6}));
  ops.push_back(classif_reformulate(randn(4, 3, rng), Vector{1, -1, 1, -1}).first);
  ops.push_back(tv_reformulate(std::make_shared<IdentityOp>(12), randn(3, 4, rng)).first);
  for (const auto& op : ops) {
    CHECK(adjoint_defect(*op, 100, 17) <= 1e-10);
    if (auto h = op->norm_hint()) CHECK(power_iteration_norm(*op, 300, 1) <= *h + 1e-8);
  }
}

TEST_CASE("BlockOp") {
  std::mt19937_64 rng(4);
  const Matrix A = randn(3, 4, rng), B = randn(3, 2, rng), C = randn(5, 2, rng);
  BlockOp blk({{std::make_shared<DenseOp>(A), std::make_shared<DenseOp>(B)},
               {nullptr, std::make_shared<DenseOp>(C)}});
  CHECK(blk.in_dim() == 6);
  CHECK(blk.out_dim() == 8);
  const Matrix D = dense_assembly(blk);
  for (int t = 0; t < 20; ++t) {
    const Vector x = randn(6, rng), y = randn(8, rng);
    Vector dx(8, 0.0), dty(6, 0.0);
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 6; ++j) {
        dx[i] += D(i, j) * x[j];
        dty[j] += D(i, j) * y[i];
      }
    CHECK(testutil::max_abs_diff(blk.apply(x), dx) <= 1e-12);
    CHECK(testutil::max_abs_diff(blk.adjoint(y), dty) <= 1e-12);
  }
  CHECK(D(3, 0) == 0.0);  // zero block

  CHECK_THROWS_AS(BlockOp({{std::make_shared<DenseOp>(A)}, {std::make_shared<DenseOp>(C)}}), ConfigError);
  CHECK_THROWS_AS(BlockOp({{nullptr}}), ConfigError);
  BlockOp explicit_sizes({{nullptr}}, {2}, {3});
  CHECK(explicit_sizes.out_dim() == 2);
}

TEST_CASE("classif_reformulate") {
  SUBCASE("scalar case") {
    auto [op, rhs] = classif_reformulate(Matrix(1, 1, Vector{2.0}), Vector{1.0});
    const Matrix D = dense_assembly(*op);
    CHECK(D.values() == Vector{2.0, -1.0});
    CHECK(rhs == Vector{1.0});
  }
  SUBCASE("negative label flips the row") {
    const Matrix A(2, 2, Vector{1, 2, 3, 4});
    const Matrix D = dense_assembly(*classif_reformulate(A, Vector{1, -1}).first);
    CHECK(D.values() == Vector{1, 2, -1, 0, -3, -4, 0, -1});
  }
  SUBCASE("feasible with u >= 0 iff margins >= 1, enumerated on a grid") {
    const Matrix A(2, 2, Vector{1.0, -0.5, 0.25, 2.0});
    const Vector labels{1, -1};
    auto [op, rhs] = classif_reformulate(A, labels);
    for (double x0 = -3; x0 <= 3; x0 += 0.25)
      for (double x1 = -3; x1 <= 3; x1 += 0.25) {
        bool margins = true;
        Vector u(2);
        for (std::size_t i = 0; i < 2; ++i) {
          const double m = labels[i] * (A(i, 0) * x0 + A(i, 1) * x1);
          margins = margins && m >= 1.0;
          u[i] = m - 1.0;  // the only slack with A~ (x, u) = 1
        }
        const Vector r = sub(op->apply(Vector{x0, x1, u[0], u[1]}), rhs);
        const bool feasible = norm_inf(r) <= 1e-12 && u[0] >= 0 && u[1] >= 0;
        CHECK(feasible == margins);
      }
  }
  SUBCASE("dimension mismatch") { CHECK_THROWS_AS(classif_reformulate(Matrix(2, 2), Vector{1.0}), ConfigError); }
}

TEST_CASE("tv_reformulate") {
  std::mt19937_64 rng(12);
  const Matrix B = randn(3, 3, rng);
  auto [op, rhs] = tv_reformulate(std::make_shared<IdentityOp>(9), B);
  CHECK(op->in_dim() == 27);
  CHECK(op->out_dim() == 27);

  // (B, grad B) is feasible; (X, grad X) maps to (X, 0)
  Grad2dOp G(3, 3);
  Vector z(B.values());
  const Vector gB = G.apply(B.values());
  z.insert(z.end(), gB.begin(), gB.end());
  CHECK(norm_inf(sub(op->apply(z), rhs)) <= 1e-12);

  const Vector X = randn(9, rng);
  Vector zx(X);
  const Vector gX = G.apply(X);
  zx.insert(zx.end(), gX.begin(), gX.end());
  const Vector out = op->apply(zx);
  CHECK(testutil::max_abs_diff(Vector(out.begin(), out.begin() + 9), X) <= 1e-12);
  CHECK(norm_inf(Vector(out.begin() + 9, out.end())) <= 1e-12);

  const Matrix D = dense_assembly(*op);
  for (int t = 0; t < 10; ++t) {
    const Vector x = randn(27, rng);
    Vector dx(27, 0.0);
    for (std::size_t i = 0; i < 27; ++i)
      for (std::size_t j = 0; j < 27; ++j) dx[i] += D(i, j) * x[j];
    CHECK(testutil::max_abs_diff(op->apply(x), dx) <= 1e-12);
  }
  CHECK_THROWS_AS(tv_reformulate(std::make_shared<IdentityOp>(8), B), ConfigError);
}

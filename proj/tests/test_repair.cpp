#include <doctest.h>

#include <cmath>

#include "corrgan/elliptope.hpp"
#include "corrgan/errors.hpp"
#include "corrgan/gan/model.hpp"
#include "corrgan/nearest_correlation.hpp"
#include "corrgan/returns.hpp"
#include "helpers.hpp"

using namespace corrgan;
using namespace corrgan::repair;

namespace {

Eigen::MatrixXd random_symmetric(Index n, std::uint64_t seed, double scale = 1.0) {
  Philox rng(seed, 5);
  Eigen::MatrixXd a(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) a(i, j) = a(j, i) = scale * standard_normal(rng);
  }
  return a;
}

/// Frobenius-nearest PSD matrix by gradient descent on X = B B^T, with no
/// eigendecomposition. Returns the minimal distance ||B B^T - A||.
double psd_distance_oracle(const Eigen::MatrixXd& a) {
  const Index n = a.rows();
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
  const double step = 0.25 / (a.norm() + 1.0);
  for (int it = 0; it < 400000; ++it) {
    const Eigen::MatrixXd r = b * b.transpose() - a;
    const Eigen::MatrixXd g = 4.0 * r * b;
    if (g.norm() < 1e-13) break;
    b -= step * g;
  }
  return (b * b.transpose() - a).norm();
}

/// Nearest correlation matrix by projected gradient over B with unit rows:
/// X = B B^T has unit diagonal and is PSD by construction.
Eigen::MatrixXd correlation_oracle(const Eigen::MatrixXd& a) {
  const Index n = a.rows();
  Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
  for (int it = 0; it < 500000; ++it) {
    const Eigen::MatrixXd r = b * b.transpose() - a;
    const Eigen::MatrixXd g = 4.0 * r * b;
    Eigen::MatrixXd next = b - 0.02 * g;
    for (Index i = 0; i < n; ++i) next.row(i).normalize();
    const double moved = (next - b).norm();
    b = std::move(next);
    if (moved < 1e-14) break;
  }
  return b * b.transpose();
}

Eigen::MatrixXd higham_input() {
  Eigen::MatrixXd m(3, 3);
  m << 1, 1, 0, 1, 1, 1, 0, 1, 1;
  return m;
}

}  // namespace

TEST_CASE("config validation") {
  RepairConfig c;
  c.tol = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_iter = 0;
  CHECK_THROWS_AS(nearest_correlation(RawMatrix(Eigen::MatrixXd::Identity(2, 2)), c), ConfigError);
}

TEST_CASE("symmetrize") {
  Eigen::MatrixXd m(2, 2);
  m << 0, 2, 0, 0;
  Eigen::MatrixXd expected(2, 2);
  expected << 0, 1, 1, 0;
  CHECK(symmetrize(RawMatrix(m)).values() == expected);
  const auto s = random_symmetric(4, 1);
  CHECK(symmetrize(RawMatrix(s)).values() == s);
  // The residual is antisymmetric, hence orthogonal to every symmetric matrix.
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(4, 4);
  const Eigen::MatrixXd r = a - symmetrize(RawMatrix(a)).values();
  CHECK(std::abs((r.array() * s.array()).sum()) < 1e-12);
}

TEST_CASE("project_psd") {
  const Eigen::MatrixXd d = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  const Eigen::MatrixXd expected = Eigen::Vector2d(1.0, 0.0).asDiagonal();
  CHECK((project_psd(RawMatrix(d)).values() - expected).norm() < 1e-15);
  const auto c = testing::random_correlation(5, 3);
  CHECK((project_psd(c.to_raw()).values() - c.values()).cwiseAbs().maxCoeff() < 1e-12);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto a = random_symmetric(4, 10 + s);
    const auto p = project_psd(RawMatrix(a));
    CHECK(symmetric_eigenvalues(p.values())(0) > -1e-12);
    CHECK(std::abs((p.values() - a).norm() - psd_distance_oracle(a)) < 1e-6);
  }
}

TEST_CASE("project_unit_diagonal") {
  CHECK(project_unit_diagonal(RawMatrix(Eigen::MatrixXd::Identity(3, 3))).values() == Eigen::MatrixXd::Identity(3, 3));
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(3, 3, 0.4);
  m.diagonal().setConstant(0.998);
  const auto p = project_unit_diagonal(RawMatrix(m));
  CHECK(p.values().diagonal() == Eigen::VectorXd::Ones(3));
  CHECK(p(0, 1) == 0.4);
  CHECK(project_unit_diagonal(p) == p);
}

TEST_CASE("valid matrices are fixed points") {
  for (const auto& m : elliptope::sample_onion({6, 20, 4})) {
    const auto r = nearest_correlation(m.to_raw());
    CHECK(r.iterations == 1);
    CHECK((r.matrix.values() - m.values()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("worked 3x3 example") {
  RepairConfig tight;
  tight.tol = 1e-12;
  tight.max_iter = 10000;
  const auto r = nearest_correlation(RawMatrix(higham_input()), tight);
  const Eigen::MatrixXd oracle = correlation_oracle(higham_input());
  CHECK((r.matrix.values() - oracle).cwiseAbs().maxCoeff() < 1e-6);
  // Pinned from the two solvers above, rounded to four decimals.
  Eigen::MatrixXd pinned(3, 3);
  pinned << 1, 0.7607, 0.1573, 0.7607, 1, 0.7607, 0.1573, 0.7607, 1;
  const auto d = nearest_correlation(RawMatrix(higham_input()));
  CHECK((d.matrix.values() - pinned).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(validate(d.matrix).is_valid);
}

TEST_CASE("agreement with the projected-gradient oracle on perturbed 5x5 matrices") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Eigen::MatrixXd a = testing::random_correlation(5, 200 + s).values() + random_symmetric(5, 300 + s, 0.3);
    a.diagonal().setOnes();
    RepairConfig tight;
    tight.tol = 1e-12;
    tight.max_iter = 10000;
    const auto r = nearest_correlation(RawMatrix(a), tight);
    CHECK((r.matrix.values() - correlation_oracle(a)).norm() < 1e-4);
  }
}

TEST_CASE("perturbed matrices converge to valid output") {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const Index n = 3 + static_cast<Index>(s % 8);
    Eigen::MatrixXd a = testing::random_correlation(n, s).values() + random_symmetric(n, s, 0.2);
    a.diagonal().array() -= 0.002;
    const auto r = nearest_correlation(RawMatrix(a));
    CHECK(r.iterations <= 200);
    const auto v = validate(r.matrix);
    CHECK(v.is_valid);
    CHECK(v.max_diag_deviation == 0.0);
    // Any other correlation matrix is at least as far from the input.
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    CHECK((r.matrix.values() - sym).norm() <= (clip_to_psd_correlation(sym) - sym).norm() + 1e-6);
  }
}

TEST_CASE("untrained generator output converges") {
  const auto model = gan::init_model(gan::ArchitectureDescriptor::dense(20, 32, {64, 64}, {64, 64}), 1);
  int worst = 0;
  for (const auto& m : gan::generate(model, 1000, 2)) {
    const auto r = nearest_correlation(m);
    worst = std::max(worst, r.iterations);
    REQUIRE(validate(r.matrix).is_valid);
  }
  CHECK(worst <= 200);
}

TEST_CASE("non-convergence carries the last iterate") {
  RepairConfig c;
  c.max_iter = 1;
  c.tol = 1e-15;
  try {
    nearest_correlation(RawMatrix(higham_input()), c);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.last_iterate().n() == 3);
    CHECK(e.residual() > 0.0);
  }
}

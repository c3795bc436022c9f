#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>

#include "corrgan/canonicalize.hpp"
#include "corrgan/elliptope.hpp"
#include "helpers.hpp"

using namespace corrgan;
using namespace corrgan::canon;

namespace {

/// Textbook single linkage: repeatedly merge the two clusters with the
/// smallest minimum member distance. Returns the cophenetic matrix.
Eigen::MatrixXd naive_cophenetic(const Eigen::MatrixXd& d) {
  const Index n = d.rows();
  std::vector<std::vector<Index>> clusters;
  for (Index i = 0; i < n; ++i) clusters.push_back({i});
  Eigen::MatrixXd coph = Eigen::MatrixXd::Zero(n, n);
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 1;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        double link = std::numeric_limits<double>::infinity();
        for (const Index i : clusters[a]) {
          for (const Index j : clusters[b]) link = std::min(link, d(i, j));
        }
        if (link < best) {
          best = link;
          ba = a;
          bb = b;
        }
      }
    }
    for (const Index i : clusters[ba]) {
      for (const Index j : clusters[bb]) coph(i, j) = coph(j, i) = best;
    }
    clusters[ba].insert(clusters[ba].end(), clusters[bb].begin(), clusters[bb].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
  }
  return coph;
}

CorrelationMatrix three(double r12, double r13, double r23) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
  m(0, 1) = m(1, 0) = r12;
  m(0, 2) = m(2, 0) = r13;
  m(1, 2) = m(2, 1) = r23;
  return CorrelationMatrix::from_values(m);
}

std::vector<Permutation> all_permutations(Index n) {
  Permutation p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  std::vector<Permutation> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

std::size_t position(const Permutation& order, Index leaf) {
  return static_cast<std::size_t>(std::find(order.begin(), order.end(), leaf) - order.begin());
}

}  // namespace

TEST_CASE("correlation distance") {
  const auto d2 = [](double rho) {
    return correlation_distance(from_upper_vector(ElliptopeVector(Eigen::VectorXd::Constant(1, rho))));
  };
  CHECK(d2(1.0)(0, 1) == 0.0);
  CHECK(d2(-1.0)(0, 1) == 2.0);
  CHECK(d2(0.5)(0, 1) == 1.0);
  CHECK(d2(0.5).diagonal().isZero(0.0));
}

TEST_CASE("single linkage merges the closest pair first") {
  Eigen::MatrixXd d(3, 3);
  d << 0, 0.1, 0.2, 0.1, 0, 0.3, 0.2, 0.3, 0;
  const auto t = single_linkage(d);
  REQUIRE(t.merges.size() == 2);
  CHECK(std::min(t.merges[0].left, t.merges[0].right) == 0);
  CHECK(std::max(t.merges[0].left, t.merges[0].right) == 1);
  CHECK(t.merges[0].height == 0.1);
  CHECK(t.merges[1].height == 0.2);
  CHECK(t.merges[1].size == 3);
  CHECK_FALSE(t.index_tie_break);
}

TEST_CASE("single linkage agrees with the naive agglomeration") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto m = testing::random_correlation(3 + static_cast<Index>(s % 10), s);
    const auto d = correlation_distance(m);
    const auto t = single_linkage(d);
    REQUIRE(t.merges.size() == static_cast<std::size_t>(m.n() - 1));
    const auto c = cophenetic_distances(t);
    CHECK(c == naive_cophenetic(d));
    // Subdominant ultrametric and monotone heights.
    CHECK(((d - c).array() >= 0.0).all());
    for (std::size_t k = 1; k < t.merges.size(); ++k) CHECK(t.merges[k].height >= t.merges[k - 1].height);
  }
}

TEST_CASE("equicorrelation ties") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 4, 0.3);
  m.diagonal().setOnes();
  const auto c = CorrelationMatrix::from_values(m);
  const auto t = single_linkage(correlation_distance(c));
  for (const auto& merge : t.merges) CHECK(merge.height == t.merges.front().height);
  CHECK(t.index_tie_break);
  const auto order = hierarchical_permutation(c);
  CHECK(order.ambiguous);
  CHECK(canonicalize(c) == c);
}

TEST_CASE("identity is its own representative") {
  const auto id = CorrelationMatrix::identity(5);
  CHECK(canonicalize(id) == id);
}

TEST_CASE("n=2 representative does not depend on order") {
  const auto m = from_upper_vector(ElliptopeVector(Eigen::VectorXd::Constant(1, 0.3)));
  CHECK(canonicalize(m) == canonicalize(permute(m, Permutation{1, 0})));
}

TEST_CASE("3x3 worked example over all orderings") {
  const auto m = three(0.8, 0.2, 0.4);
  // Leaf scores: (0.8 + 0.2) / 2, (0.8 + 0.4) / 2, (0.2 + 0.4) / 2. The
  // pair {0, 1} (mean score 0.55) precedes leaf 2 and leaf 1 precedes leaf 0.
  const auto expected = permute(m, Permutation{1, 0, 2});
  for (const auto& p : all_permutations(3)) {
    const auto q = permute(m, p);
    const auto form = canonicalize_with_order(q);
    CHECK(form.matrix == expected);
    CHECK_FALSE(form.permutation.ambiguous);
    const auto a = position(form.permutation.order, p[0] == 0 ? 0 : (p[1] == 0 ? 1 : 2));
    const auto b = position(form.permutation.order, p[0] == 1 ? 0 : (p[1] == 1 ? 1 : 2));
    CHECK((a > b ? a - b : b - a) == 1);
  }
}

TEST_CASE("two blocks stay contiguous") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 4, 0.1);
  m.block(0, 0, 2, 2).setConstant(0.9);
  m.block(2, 2, 2, 2).setConstant(0.9);
  m.diagonal().setOnes();
  const auto c = CorrelationMatrix::from_values(m);
  for (const auto& p : all_permutations(4)) {
    const auto r = canonicalize(permute(c, p));
    // Leading and trailing 2x2 blocks are the within-block pairs.
    CHECK(r(0, 1) == 0.9);
    CHECK(r(2, 3) == 0.9);
    CHECK(r(0, 2) == 0.1);
    CHECK(r == c);
  }
}

TEST_CASE("canonical form is invariant for generic matrices") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Index n = 3 + static_cast<Index>(s % 18);
    const auto m = testing::random_correlation(n, 1000 + s);
    const auto p = testing::random_permutation(n, s);
    const auto a = canonicalize_with_order(m);
    const auto b = canonicalize_with_order(permute(m, p));
    CHECK_FALSE(a.permutation.ambiguous);
    CHECK(a.matrix == b.matrix);
  }
}

TEST_CASE("canonicalize is idempotent and spectrum preserving") {
  for (const auto& m : elliptope::sample_onion({8, 100, 3})) {
    const auto c = canonicalize(m);
    CHECK(canonicalize(c) == c);
    CHECK((symmetric_eigenvalues(c.values()) - symmetric_eigenvalues(m.values())).cwiseAbs().maxCoeff() < 1e-12);
    auto a = to_upper_vector(m).coeffs();
    auto b = to_upper_vector(c).coeffs();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }
}

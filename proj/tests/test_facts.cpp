#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>

#include "corrgan/canonicalize.hpp"
#include "corrgan/elliptope.hpp"
#include "corrgan/errors.hpp"
#include "corrgan/stylized_facts.hpp"
#include "helpers.hpp"
#include "mst_oracle.hpp"

using namespace corrgan;
using namespace corrgan::facts;
using testing::brute_force_mst;
using testing::Edge;

namespace {

std::vector<CorrelationMatrix> market_like(Index n, std::size_t count, std::uint64_t seed) {
  std::vector<CorrelationMatrix> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(testing::random_correlation(n, seed + k));
  return out;
}

}  // namespace

TEST_CASE("Marchenko-Pastur") {
  const auto p = MarchenkoPasturParams::make(0.25);
  CHECK(p.lambda_minus == doctest::Approx(0.25));
  CHECK(p.lambda_plus == doctest::Approx(2.25));
  CHECK(marchenko_pastur_density(p, 0.1) == 0.0);
  CHECK(marchenko_pastur_density(p, 3.0) == 0.0);
  for (const double q : {0.1, 0.25, 0.5}) {
    const auto mp = MarchenkoPasturParams::make(q, 0.7);
    const int steps = 200000;
    const double h = (mp.lambda_plus - mp.lambda_minus) / steps;
    double integral = 0.0, first = 0.0;
    for (int k = 0; k < steps; ++k) {
      const double l = mp.lambda_minus + (k + 0.5) * h;
      integral += marchenko_pastur_density(mp, l) * h;
      first += l * marchenko_pastur_density(mp, l) * h;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(first == doctest::Approx(0.7).epsilon(1e-3));
  }
  CHECK_THROWS_AS(MarchenkoPasturParams::make(0.0), ConfigError);
  CHECK_THROWS_AS(MarchenkoPasturParams::make(0.5, 0.0), ConfigError);
}

TEST_CASE("eigen spectrum") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 4, 0.5);
  m.diagonal().setOnes();
  const auto s = eigen_spectrum(CorrelationMatrix::from_values(m), 0.25);
  CHECK(s.eigenvalues(0) == doctest::Approx(2.5));
  CHECK(s.eigenvalues(3) == doctest::Approx(0.5));
  CHECK(s.lambda1_share == doctest::Approx(2.5 / 4.0));
  CHECK(s.first_eigenvector.sum() > 0.0);
  CHECK(s.first_eigenvector.norm() == doctest::Approx(1.0));
  REQUIRE(s.bulk.has_value());
  CHECK(s.bulk->sigma2 == doctest::Approx(1.0 - 2.5 / 4.0));
  CHECK(s.outlier_count == 1);
  CHECK_FALSE(eigen_spectrum(CorrelationMatrix::identity(3)).bulk.has_value());
}

TEST_CASE("Perron-Frobenius check") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(3, 3, 0.4);
  m.diagonal().setOnes();
  const auto pos = perron_frobenius_check(CorrelationMatrix::from_values(m));
  CHECK(pos.positive);
  CHECK(pos.min_entry == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK_FALSE(pos.degenerate);
  // Two anticorrelated blocks: the top eigenvector has mixed signs.
  Eigen::MatrixXd b(2, 2);
  b << 1, -0.8, -0.8, 1;
  CHECK_FALSE(perron_frobenius_check(CorrelationMatrix::from_values(b)).positive);
  CHECK(perron_frobenius_check(CorrelationMatrix::identity(3)).degenerate);
}

TEST_CASE("MST agrees with exhaustive enumeration for small n") {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Index n = 3 + static_cast<Index>(s % 5);
    const auto m = testing::random_correlation(n, 40 + s);
    const auto t = mst(m);
    REQUIRE(t.edges.size() == static_cast<std::size_t>(n - 1));
    const auto [best, edges] = brute_force_mst(canon::correlation_distance(m));
    CHECK(t.total_weight == doctest::Approx(best).epsilon(1e-12));
    std::set<Edge> got;
    for (const auto& e : t.edges) got.emplace(std::min(e.i, e.j), std::max(e.i, e.j));
    CHECK(got == edges);
    Index degree_sum = 0;
    for (const Index d : t.degrees) {
      CHECK(d >= 1);
      degree_sum += d;
    }
    CHECK(degree_sum == 2 * (n - 1));
  }
}

TEST_CASE("MST of a star") {
  // One-factor structure with node 0 as the factor.
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(6, 6, 0.64);
  m.row(0).setConstant(0.8);
  m.col(0).setConstant(0.8);
  m.diagonal().setOnes();
  const auto t = mst(CorrelationMatrix::from_values(m));
  CHECK(t.degrees[0] == 5);
  CHECK(t.degree_histogram[1] == 5);
  CHECK(t.degree_histogram[5] == 1);
  CHECK(t.fit.degenerate);
}

TEST_CASE("power-law fit recovers the exponent") {
  // Inverse-CDF draws from P(k) proportional to k^-2.5 on 1..10^5.
  std::vector<double> cdf;
  double total = 0.0;
  for (int k = 1; k <= 100000; ++k) cdf.push_back(total += std::pow(k, -2.5));
  Philox rng(7);
  std::vector<Index> degrees;
  for (int k = 0; k < 10000; ++k) {
    const double u = rng.uniform01() * total;
    degrees.push_back(1 + static_cast<Index>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()));
  }
  const auto fit = power_law_fit(degrees);
  REQUIRE_FALSE(fit.degenerate);
  CHECK(std::abs(fit.exponent - 2.5) <= 0.2);
  CHECK(fit.exponent == doctest::Approx(1.0 - fit.slope));
  CHECK(fit.k_min == 2);
  CHECK(power_law_fit(std::vector<Index>{1, 1, 2, 2}).degenerate);
}

TEST_CASE("hierarchy score") {
  // Nested blocks give an exactly ultrametric distance.
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 4, 0.2);
  m.block(0, 0, 2, 2).setConstant(0.9);
  m.block(2, 2, 2, 2).setConstant(0.6);
  m.diagonal().setOnes();
  const auto h = hierarchy_score(CorrelationMatrix::from_values(m));
  REQUIRE(h.defined);
  CHECK(h.score == doctest::Approx(1.0));
  CHECK_FALSE(hierarchy_score(CorrelationMatrix::identity(4)).defined);
  const auto g = hierarchy_score(testing::random_correlation(12, 3));
  REQUIRE(g.defined);
  CHECK(g.score > 0.0);
  CHECK(g.score <= 1.0);
}

TEST_CASE("degree distribution bins") {
  const std::vector<std::size_t> h{0, 4, 2, 1, 0, 0, 1, 2};
  const auto d = degree_distribution(h);
  REQUIRE(d.size() == 6);
  CHECK(d[0] == doctest::Approx(0.4));
  CHECK(d[5] == doctest::Approx(0.3));
}

TEST_CASE("a set compared with itself passes every fact") {
  const auto set = market_like(10, 40, 500);
  const auto r = stylized_report(set, set);
  CHECK(r.comparison.mean_diff == 0.0);
  CHECK(r.comparison.lambda1_ks == 0.0);
  CHECK(r.comparison.degree_chi2 == 0.0);
  CHECK(r.verdicts.size() == 5);
  CHECK(r.all_passed());
  CHECK_FALSE(r.tail_deficit);
}

TEST_CASE("report is invariant under relabelling of assets") {
  const auto ref = market_like(9, 30, 600);
  const auto cand = elliptope::sample_onion({9, 30, 1});
  std::vector<CorrelationMatrix> shuffled;
  for (std::size_t k = 0; k < cand.size(); ++k) shuffled.push_back(permute(cand[k], testing::random_permutation(9, k)));
  CHECK(stylized_report(ref, cand).to_key_values().str() == stylized_report(ref, shuffled).to_key_values().str());
}

TEST_CASE("different laws are told apart") {
  const auto ref = market_like(10, 200, 700);
  const auto cand = elliptope::sample_onion({10, 200, 2});
  const auto r = stylized_report(ref, cand);
  CHECK_FALSE(r.all_passed());
  CHECK(std::abs(r.comparison.mean_diff) > 0.05);
}

TEST_CASE("decision inputs survive the text form") {
  const auto r = stylized_report(market_like(8, 30, 800), elliptope::sample_onion({8, 30, 3}));
  const auto kv = io::KeyValueFile::parse(r.to_key_values().str());
  CHECK(kv.get("format") == "corrgan-stylized-report-1");
  const auto [t, c] = StylizedFactsReport::parse_decision_inputs(kv);
  const auto again = decide(c, t);
  REQUIRE(again.size() == r.verdicts.size());
  for (std::size_t k = 0; k < again.size(); ++k) {
    CHECK(again[k].fact == r.verdicts[k].fact);
    CHECK(again[k].passed == r.verdicts[k].passed);
  }
  CHECK(c.lambda1_ks == r.comparison.lambda1_ks);
  CHECK(t.degree_chi2 == r.thresholds.degree_chi2);
}

TEST_CASE("report preconditions and histograms") {
  const auto a = market_like(5, 4, 1);
  const auto b = market_like(6, 4, 1);
  CHECK_THROWS_AS(stylized_report(a, b), ShapeError);
  CHECK_THROWS_AS(stylized_report(a, std::vector<CorrelationMatrix>{}), ConfigError);
  const auto dir = testing::scratch_dir("facts_histograms");
  stylized_report(a, a).write_histograms(dir);
  for (const char* f : {"pairwise_histogram.csv", "eigenvalue_histogram.csv", "degree_histogram.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  std::ifstream in(dir / "pairwise_histogram.csv");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 51);
}

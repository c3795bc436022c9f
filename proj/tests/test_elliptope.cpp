#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/distributions/beta.hpp>

#include "corrgan/elliptope.hpp"
#include "corrgan/errors.hpp"
#include "corrgan/stats.hpp"

using namespace corrgan;
using namespace corrgan::elliptope;

namespace {

std::vector<double> coordinate(const std::vector<CorrelationMatrix>& set, Index i, Index j) {
  std::vector<double> out;
  for (const auto& m : set) out.push_back(m(i, j));
  return out;
}

/// One-sample KS statistic against a continuous CDF.
template <typename Cdf>
double ks_one_sample(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  double d = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double f = cdf(x[k]);
    d = std::max({d, f - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - f});
  }
  return d;
}

}  // namespace

TEST_CASE("sampler config validation") {
  CHECK_THROWS_AS(sample_onion({1, 1, 0}), ConfigError);
  CHECK_THROWS_AS(sample_onion({3, 0, 0}), ConfigError);
}

TEST_CASE("onion samples are valid and deterministic") {
  const auto a = sample_onion({3, 10000, 1});
  for (const auto& m : a) REQUIRE(validate(m).is_valid);
  const auto b = sample_onion({3, 10000, 1});
  CHECK(a == b);
  for (const auto& m : sample_onion({30, 50, 2})) REQUIRE(validate(m).is_valid);
}

TEST_CASE("n=2 coefficient is uniform on [-1, 1]") {
  const auto s = sample_onion({2, 10000, 3});
  CHECK(ks_one_sample(coordinate(s, 0, 1), [](double x) { return (x + 1.0) / 2.0; }) < 0.02);
}

TEST_CASE("onion marginals follow the known Beta law") {
  // Uniform on the elliptope: each coefficient is 2 Beta(n/2, n/2) - 1.
  for (Index n : {3, 5}) {
    const auto s = sample_onion({n, 20000, 4});
    const boost::math::beta_distribution<> beta(n / 2.0, n / 2.0);
    for (Index j = 1; j < n; ++j) {
      const double d = ks_one_sample(coordinate(s, 0, j), [&](double x) { return cdf(beta, (x + 1.0) / 2.0); });
      CHECK(stats::kolmogorov_survival(std::sqrt(20000.0) * d) > 0.01);
    }
  }
}

TEST_CASE("onion matches the rejection oracle at n=3") {
  const auto onion = sample_onion({3, 20000, 5});
  const auto oracle = rejection_oracle({3, 20000, 6}).samples;
  for (const auto& [i, j] : {std::pair<Index, Index>{0, 1}, {0, 2}, {1, 2}}) {
    const auto ks = stats::ks_two_sample(coordinate(onion, i, j), coordinate(oracle, i, j));
    CHECK(ks.p_value > 0.01);
  }
  // 5x5x5 histogram of the three coefficients.
  const auto cell = [](const CorrelationMatrix& m) {
    const auto bin = [](double v) { return std::min<std::size_t>(4, static_cast<std::size_t>((v + 1.0) / 0.4)); };
    return bin(m(0, 1)) * 25 + bin(m(0, 2)) * 5 + bin(m(1, 2));
  };
  std::vector<std::size_t> a(125, 0), b(125, 0);
  for (const auto& m : onion) ++a[cell(m)];
  for (const auto& m : oracle) ++b[cell(m)];
  CHECK(stats::chi_square_homogeneity(a, b).p_value > 0.001);
}

TEST_CASE("rejection oracle") {
  const auto r3 = rejection_proposals(3, 100000, 7);
  CHECK(std::abs(r3.acceptance_rate() - std::numbers::pi * std::numbers::pi / 16.0) < 0.01);
  for (const auto& m : r3.samples) REQUIRE(validate(m).is_valid);
  CHECK(rejection_proposals(2, 1000, 7).acceptance_rate() == 1.0);
  CHECK_THROWS_AS(rejection_oracle({5, 1, 0}), DomainError);
  const auto r = rejection_oracle({4, 100, 8});
  CHECK(r.samples.size() == 100);
  CHECK(r.proposals >= 100);
}

#include <doctest.h>

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "corrgan/rng.hpp"
#include "corrgan/stats.hpp"

using namespace corrgan;
using namespace corrgan::stats;

TEST_CASE("mean and population std") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const auto m = mean_std(v);
  CHECK(m.mean == 5.0);
  CHECK(m.std == 2.0);
  CHECK(mean_std(std::vector<double>{3.0}).std == 0.0);
}

TEST_CASE("histogram") {
  const std::vector<double> v{-1.0, -0.99, 0.0, 0.5, 1.0, 2.0, -3.0};
  const auto h = histogram(v, 4, -1.0, 1.0);
  CHECK(h.total == 7);
  CHECK(h.counts == std::vector<std::size_t>{3, 0, 1, 3});
  CHECK(h.bin_width() == 0.5);
  CHECK(h.bin_center(0) == -0.75);
  double integral = 0.0;
  for (const double d : h.density()) integral += d * h.bin_width();
  CHECK(integral == doctest::Approx(1.0));
}

TEST_CASE("kolmogorov survival") {
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.9639).epsilon(1e-3));
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.2700).epsilon(1e-3));
  CHECK(kolmogorov_survival(1.358) == doctest::Approx(0.05).epsilon(1e-2));
  CHECK(kolmogorov_survival(5.0) < 1e-20);
}

TEST_CASE("two-sample KS") {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6}, c{1.5, 2.5, 3.5, 4.5};
  CHECK(ks_two_sample(a, b).statistic == 1.0);
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  CHECK(ks_two_sample(a, a).p_value == 1.0);
  // Largest ECDF gap, evaluated at every jump point.
  double d = 0.0;
  for (const double x : {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.5}) {
    double fa = 0, fc = 0;
    for (const double y : a) fa += y <= x;
    for (const double y : c) fc += y <= x;
    d = std::max(d, std::abs(fa / 3.0 - fc / 4.0));
  }
  CHECK(ks_two_sample(a, c).statistic == doctest::Approx(d));
  CHECK(ks_two_sample(c, a).statistic == doctest::Approx(d));

  // Same law: the p-value is roughly uniform, so it is rarely tiny.
  int small = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Philox rng(s);
    std::vector<double> x, y;
    for (int k = 0; k < 500; ++k) {
      x.push_back(standard_normal(rng));
      y.push_back(standard_normal(rng));
    }
    small += ks_two_sample(x, y).p_value < 0.01;
  }
  CHECK(small <= 5);
}

TEST_CASE("chi-square homogeneity") {
  const std::vector<std::size_t> a{10, 20, 0}, b{20, 10, 0};
  const auto r = chi_square_homogeneity(a, b);
  CHECK(r.dof == 1);
  CHECK(r.statistic == doctest::Approx(20.0 / 3.0));
  CHECK(r.p_value == doctest::Approx(cdf(complement(boost::math::chi_squared_distribution<>(1.0), 20.0 / 3.0))));
  CHECK(chi_square_homogeneity(a, a).statistic == 0.0);
  // Proportional counts are homogeneous.
  const std::vector<std::size_t> twice{20, 40, 0};
  CHECK(chi_square_homogeneity(a, twice).statistic == doctest::Approx(0.0));
}

TEST_CASE("pearson") {
  const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, flat{1, 1, 1, 1};
  CHECK(*pearson(x, y) == doctest::Approx(1.0));
  CHECK(*pearson(x, z) == doctest::Approx(-1.0));
  CHECK_FALSE(pearson(x, flat).has_value());
  const std::vector<double> u{1, 2, 3}, v{1, 3, 2};
  CHECK(*pearson(u, v) == doctest::Approx(0.5));
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "corrgan/canonicalize.hpp"
#include "corrgan/errors.hpp"
#include "corrgan/ingest.hpp"
#include "corrgan/stylized_facts.hpp"
#include "helpers.hpp"

using namespace corrgan;
using namespace corrgan::ingest;

namespace {

ReturnsPanel synthetic(Index n, Index t, std::uint64_t seed) {
  FactorMarketParams p;
  p.n_assets = n;
  p.n_days = t;
  p.n_sectors = std::min<Index>(4, n);
  p.seed = seed;
  return synth_factor_market(p);
}

double mean_offdiag(const CorrelationMatrix& m) {
  double s = 0.0;
  for (Index i = 0; i < m.n(); ++i) {
    for (Index j = i + 1; j < m.n(); ++j) s += m(i, j);
  }
  return s / static_cast<double>(m.n() * (m.n() - 1) / 2);
}

}  // namespace

TEST_CASE("parse wide returns csv") {
  SUBCASE("well formed") {
    const auto p = parse_returns_csv("date,AAA,BBB\n2020-01-02,0.01,-0.02\n2020-01-03,0.00,0.01\n2020-01-06,0.02,0.03\n");
    CHECK(p.panel.days() == 3);
    CHECK(p.panel.assets() == 2);
    CHECK(p.panel.tickers() == std::vector<std::string>{"AAA", "BBB"});
    CHECK(p.report.drop_count == 0);
    CHECK(p.panel.returns()(0, 1) == -0.02);
  }
  SUBCASE("missing values drop the row") {
    const auto p = parse_returns_csv(
        "date,AAA,BBB\n2020-01-02,0.01,-0.02\n2020-01-03,NaN,0.01\n2020-01-06,0.02,0.03\n2020-01-07,0.01,0.0\n");
    CHECK(p.panel.days() == 3);
    CHECK(p.report.drop_count == 1);
    CHECK(p.report.rows_read == 4);
  }
  SUBCASE("errors") {
    CHECK_THROWS_WITH_AS(parse_returns_csv("date,AAA,AAA\n2020-01-02,0.01,0.02\n2020-01-03,0.0,0.0\n"),
                         doctest::Contains("AAA"), IoError);
    CHECK_THROWS_AS(parse_returns_csv("day,AAA,BBB\n2020-01-02,0.01,0.02\n2020-01-03,0.0,0.0\n"), IoError);
    CHECK_THROWS_AS(parse_returns_csv("date,AAA,BBB\n2020-01-02,0.01,x\n2020-01-03,0.0,0.0\n"), IoError);
    CHECK_THROWS_AS(parse_returns_csv("date,AAA,BBB\n20-01-02,0.01,0.0\n2020-01-03,0.0,0.0\n"), IoError);
    CHECK_THROWS_AS(parse_returns_csv("date,AAA,BBB\n2020-01-02,0.01,0.0\n"), IoError);
  }
}

TEST_CASE("returns csv round trip") {
  const auto dir = testing::scratch_dir("ingest_roundtrip");
  const auto panel = synthetic(5, 30, 1);
  write_returns_csv(dir / "r.csv", panel);
  const auto back = load_returns_csv(dir / "r.csv");
  CHECK(back.panel.returns() == panel.returns());
  CHECK(back.panel.dates() == panel.dates());
  CHECK(back.panel.tickers() == panel.tickers());
}

TEST_CASE("rolling windows") {
  CHECK(rolling_windows(synthetic(3, 252, 1), 252).size() == 1);
  const auto p = synthetic(3, 504, 1);
  const auto w = rolling_windows(p, 252, 126);
  REQUIRE(w.size() == 3);
  CHECK(w[0].dates().front() == p.dates()[0]);
  CHECK(w[1].dates().front() == p.dates()[126]);
  CHECK(w[2].dates().front() == p.dates()[252]);
  CHECK(w[2].days() == 252);
  CHECK_THROWS_AS(rolling_windows(synthetic(3, 251, 1), 252), ConfigError);
}

TEST_CASE("random sub-universe") {
  const auto p = synthetic(500, 20, 2);
  const auto s = random_subuniverse(p, 3, 9);
  CHECK(s.assets() == 3);
  CHECK(std::set<std::string>(s.tickers().begin(), s.tickers().end()).size() == 3);
  CHECK(random_subuniverse(p, 3, 9).tickers() == s.tickers());
  const auto full = random_subuniverse(synthetic(6, 20, 2), 6, 1);
  auto names = full.tickers();
  std::sort(names.begin(), names.end());
  auto expected = synthetic(6, 20, 2).tickers();
  std::sort(expected.begin(), expected.end());
  CHECK(names == expected);
  CHECK_THROWS_AS(random_subuniverse(p, 0, 1), ConfigError);
  CHECK_THROWS_AS(random_subuniverse(p, 501, 1), ConfigError);
}

TEST_CASE("synthetic factor market") {
  SUBCASE("pure noise") {
    FactorMarketParams p;
    p.sector_loading = 0.0;
    p.beta_low = p.beta_high = 0.0;
    p.seed = 4;
    // Under independence rho ~ N(0, 1/252). Over 190 pairs a few may pass
    // 0.2 (3.2 sigma); none may pass 0.3 (4.8 sigma) and the typical size is 1/sqrt(252).
    const auto c = estimate_correlation(synth_factor_market(p));
    double max_abs = 0.0, mean_abs = 0.0;
    int above = 0;
    for (Index i = 0; i < c.n(); ++i) {
      for (Index j = i + 1; j < c.n(); ++j) {
        max_abs = std::max(max_abs, std::abs(c(i, j)));
        mean_abs += std::abs(c(i, j)) / 190.0;
        above += std::abs(c(i, j)) >= 0.2;
      }
    }
    CHECK(max_abs < 0.3);
    CHECK(above <= 3);
    CHECK(mean_abs == doctest::Approx(std::sqrt(2.0 / std::numbers::pi / 252.0)).epsilon(0.2));
  }
  SUBCASE("defaults bracket the target mean and have a one-signed market mode") {
    double total = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto c = estimate_correlation(synthetic(20, 252, s));
      total += mean_offdiag(c);
      CHECK(facts::perron_frobenius_check(c).positive);
    }
    const double mean = total / 100.0;
    CHECK(mean > 0.25);
    CHECK(mean < 0.45);
  }
  SUBCASE("deterministic") { CHECK(synthetic(8, 50, 3).returns() == synthetic(8, 50, 3).returns()); }
  SUBCASE("validation") {
    FactorMarketParams p;
    p.n_assets = 1;
    CHECK_THROWS_AS(synth_factor_market(p), ConfigError);
  }
}

TEST_CASE("build dataset") {
  const auto dir = testing::scratch_dir("ingest_dataset");
  const auto panel = synthetic(40, 600, 5);
  DatasetConfig cfg;
  cfg.target_count = 10;
  cfg.seed = 3;
  const auto manifest = build_dataset(panel, cfg, dir);
  CHECK(manifest.matrix_count == 10);
  CHECK(manifest.canonicalized);
  const auto again = read_dataset_manifest(dir);
  CHECK(again.files == manifest.files);
  CHECK(again.window_days == 252);
  const auto matrices = io::read_correlation_dir(dir);
  REQUIRE(matrices.size() == 10);
  for (const auto& m : matrices) {
    CHECK(m.n() == 20);
    CHECK(validate(m).is_valid);
    CHECK(canon::canonicalize(m) == m);
  }
  // The files hold the exact in-memory values.
  const auto direct = build_dataset_matrices(panel, cfg);
  for (std::size_t k = 0; k < direct.size(); ++k) CHECK(direct[k] == matrices[k]);
}

TEST_CASE("infeasible dataset target") {
  DatasetConfig cfg;
  cfg.universe_size = 3;
  cfg.target_count = 100;
  // One window of 3 assets admits a single distinct (window, universe) pair.
  CHECK_THROWS_AS(build_dataset_matrices(synthetic(3, 252, 1), cfg), ConfigError);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "attribforge/folds.hpp"
#include "attribforge/metrics.hpp"
#include "attribforge/rng.hpp"

using namespace attribforge;

TEST_CASE("metric fixtures") {
  const std::vector<double> same{1.0, 2.0, 3.0};
  const MetricTriple zero = metrics(same, same);
  REQUIRE(zero.mse == 0.0);
  REQUIRE(zero.rmse == 0.0);
  REQUIRE(zero.mae == 0.0);

  const MetricTriple unit = metrics(std::vector<double>{1, 3}, std::vector<double>{2, 2});
  REQUIRE(unit.mse == 1.0);
  REQUIRE(unit.rmse == 1.0);
  REQUIRE(unit.mae == 1.0);

  const MetricTriple mixed = metrics(std::vector<double>{0, 0, 3}, std::vector<double>{0, 0, 0});
  REQUIRE(mixed.mse == 3.0);
  REQUIRE(mixed.rmse == Catch::Approx(1.7320508).epsilon(1e-7));
  REQUIRE(mixed.mae == 1.0);
}

TEST_CASE("metric identities hold on random vectors") {
  Rng rng(404);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + rng.below(50);
    std::vector<double> z(m), zhat(m);
    for (std::size_t i = 0; i < m; ++i) {
      z[i] = rng.uniform(-10, 10);
      zhat[i] = rng.uniform(-10, 10);
    }
    const MetricTriple t = metrics(z, zhat);
    REQUIRE(t.mse >= 0.0);
    REQUIRE(t.rmse >= 0.0);
    REQUIRE(t.mae >= 0.0);
    REQUIRE(std::abs(t.rmse * t.rmse - t.mse) < 1e-12 * std::max(1.0, t.mse));
    REQUIRE(t.mae <= t.rmse + 1e-15);
  }
}

TEST_CASE("metrics rejects bad input") {
  REQUIRE_THROWS_AS(metrics(std::vector<double>{}, std::vector<double>{}), DataError);
  REQUIRE_THROWS_AS(metrics(std::vector<double>{1}, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("make_folds splits evenly") {
  const FoldPlan ten = make_folds(10, 10, 5);
  std::vector<std::size_t> sizes(10, 0);
  for (const std::size_t f : ten.assignments) ++sizes[f];
  for (const std::size_t s : sizes) REQUIRE(s == 1);

  const FoldPlan kaggle = make_folds(579, 10, 5);
  sizes.assign(10, 0);
  for (const std::size_t f : kaggle.assignments) ++sizes[f];
  std::size_t of58 = 0, of57 = 0;
  for (const std::size_t s : sizes) {
    if (s == 58) ++of58;
    if (s == 57) ++of57;
  }
  REQUIRE(of58 == 9);
  REQUIRE(of57 == 1);
}

TEST_CASE("make_folds is a function of (m, k, seed)") {
  const FoldPlan a = make_folds(101, 7, 9);
  const FoldPlan b = make_folds(101, 7, 9);
  REQUIRE(a.assignments == b.assignments);
  const FoldPlan c = make_folds(101, 7, 10);
  REQUIRE(a.assignments != c.assignments);
}

TEST_CASE("make_folds rejects k > m") {
  REQUIRE_THROWS_AS(make_folds(5, 10, 1), DataError);
  REQUIRE_THROWS_AS(make_folds(5, 1, 1), DataError);
}

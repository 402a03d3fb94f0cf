#include <cmath>

#include "doctest.h"

#include "fedprov/imputation.hpp"
#include "fedprov/rng.hpp"
#include "fedprov/synth.hpp"
#include "support.hpp"

using namespace fedprov;
using fedprov::testing::mcar_fixture;
using fedprov::testing::McarFixture;
using fedprov::testing::rmse_on_holes;

namespace {

PartialMatrix column_fixture(std::initializer_list<std::optional<double>> values) {
  PartialMatrix m;
  double k = 0.0;
  for (const auto& v : values) {
    PartialRow row;
    for (std::size_t f = 0; f < kNumFeatures; ++f) row[f] = k + static_cast<double>(f);
    row[kBmi] = v;
    m.rows.push_back(row);
    m.labels.push_back(0.0);
    k += 1.0;
  }
  return m;
}

}  // namespace

TEST_SUITE("imputation") {
  TEST_CASE("initial fill uses the observed column mean") {
    const LabeledMatrix a = initial_fill(column_fixture({1.0, std::nullopt, 3.0}));
    CHECK(a.x(1, kBmi) == 2.0);
    const LabeledMatrix b = initial_fill(column_fixture({5.0, std::nullopt}));
    CHECK(b.x(1, kBmi) == 5.0);
    const LabeledMatrix c = initial_fill(column_fixture({1.0, 2.0}));
    CHECK(c.x(0, kBmi) == 1.0);
    CHECK(c.x(1, kBmi) == 2.0);
  }

  TEST_CASE("a column with no observed value is rejected") {
    CHECK_THROWS_AS(initial_fill(column_fixture({std::nullopt, std::nullopt})), ValidationError);
  }

  TEST_CASE("complete data passes through unchanged") {
    const PartialMatrix m = column_fixture({1.0, 2.0, 7.0});
    const MiceResult r = mice_impute_detailed(m, MiceConfig{});
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        CHECK(r.data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) == *m.rows[i][f]);
      }
    }
  }

  TEST_CASE("one complete neighbour: the imputed value is its observation") {
    const MiceResult r = mice_impute_detailed(column_fixture({4.5, std::nullopt}), MiceConfig{});
    CHECK(r.data.x(1, kBmi) == doctest::Approx(4.5));
    CHECK(r.ridge_fallbacks > 0);
  }

  TEST_CASE("observed cells preserved, output complete, labels untouched") {
    const McarFixture fx = mcar_fixture(2000, 3);
    const MiceResult r = mice_impute_detailed(fx.partial, MiceConfig{});
    CHECK(r.data.x.allFinite());
    for (std::size_t i = 0; i < fx.partial.size(); ++i) {
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        if (fx.partial.rows[i][f]) {
          REQUIRE(r.data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) ==
                  *fx.partial.rows[i][f]);
        }
      }
      CHECK(r.data.y(static_cast<Eigen::Index>(i)) == fx.partial.labels[i]);
    }
    CHECK(r.iteration_deltas.size() == 10);
  }

  TEST_CASE("MCAR fixture: mean preserved and RMSE beats mean imputation") {
    const McarFixture fx = mcar_fixture(3000, 8);
    const LabeledMatrix mice = mice_impute_detailed(fx.partial, MiceConfig{}).data;
    const LabeledMatrix mean = initial_fill(fx.partial);
    const double truth = fx.complete.col(kBmi).mean();
    CHECK(std::abs(mice.x.col(kBmi).mean() - truth) / std::abs(truth) < 0.02);
    CHECK(rmse_on_holes(mice.x, fx) < rmse_on_holes(mean.x, fx));
  }

  TEST_CASE("deterministic given the seed, noise included") {
    const McarFixture fx = mcar_fixture(500, 2);
    MiceConfig noisy;
    noisy.noise = true;
    noisy.seed = 42;
    const auto a = mice_impute_detailed(fx.partial, noisy).data.x;
    const auto b = mice_impute_detailed(fx.partial, noisy).data.x;
    CHECK(a == b);
    const auto plain = mice_impute_detailed(fx.partial, MiceConfig{}).data.x;
    CHECK_FALSE(a == plain);
  }

  TEST_CASE("invalid requests") {
    CHECK_THROWS_AS(mice_impute_detailed(PartialMatrix{}, MiceConfig{}), ValidationError);
    MiceConfig zero;
    zero.n_iterations = 0;
    CHECK_THROWS_AS(mice_impute_detailed(column_fixture({1.0, std::nullopt}), zero),
                    ValidationError);
  }

  TEST_CASE("imputes a generated cohort") {
    const Dataset ds = generate_cohort(default_generator_config(), 1).data;
    const LabeledMatrix m = mice_impute(ds, MiceConfig{});
    CHECK(m.size() == ds.size());
    CHECK(m.x.allFinite());
  }
}

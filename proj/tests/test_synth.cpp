#include <cmath>

#include "doctest.h"

#include "fedprov/evaluation.hpp"
#include "fedprov/synth.hpp"

using namespace fedprov;

namespace {

double positive_rate(const Dataset& ds) {
  std::size_t pos = 0;
  for (const auto& r : ds.records) pos += r.diabetes ? 1 : 0;
  return static_cast<double>(pos) / static_cast<double>(ds.size());
}

GeneratorConfig complete(GeneratorConfig g) {
  g.missingness = MissingnessSpec{};
  return g;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("age marginal on 100k records") {
    const Cohort c = generate_cohort(scaled_to(default_generator_config(), 100000), 11);
    double sum = 0.0;
    double sq = 0.0;
    for (const auto& r : c.data.records) {
      sum += r.age_years;
      sq += r.age_years * r.age_years;
    }
    const double n = static_cast<double>(c.data.size());
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(std::abs(mean - 57.1) < 0.5);
    CHECK(std::abs(sd - 14.39) < 0.5);
    CHECK(std::abs(positive_rate(c.data) - 0.1836) < 0.01);
  }

  TEST_CASE("province rates hit their targets") {
    const GeneratorConfig g = default_generator_config();
    const Cohort c = generate_cohort(g, 3);
    const auto parts = partition_by_province(c.data);
    for (const auto& p : g.provinces) {
      CHECK(std::abs(positive_rate(parts.parts.at(p.province)) - p.target_positive_rate) < 0.01);
    }
  }

  TEST_CASE("zero risk model gives a coin flip") {
    GeneratorConfig g = scaled_to(default_generator_config(), 20000);
    g.risk.coefficients.fill(0.0);
    for (auto& p : g.provinces) p.target_positive_rate = 0.5;
    const Cohort c = generate_cohort(g, 5);
    // Binomial 99% interval half-width for n = 20000 is about 0.0091.
    CHECK(std::abs(positive_rate(c.data) - 0.5) < 0.0095);
    RiskModel zero = g.risk;
    const double auc = oracle_auc(zero, g.features, generate_cohort(complete(g), 5).data);
    CHECK(auc == doctest::Approx(0.5));
  }

  TEST_CASE("values stay inside their ranges") {
    const Cohort c = generate_cohort(default_generator_config(), 9);
    for (const auto& r : c.data.records) CHECK_NOTHROW(validate(r));
  }

  TEST_CASE("same seed, same cohort; different seed, different cohort") {
    const auto g = default_generator_config();
    CHECK(generate_cohort(g, 1).data == generate_cohort(g, 1).data);
    CHECK_FALSE(generate_cohort(g, 1).data == generate_cohort(g, 2).data);
  }

  TEST_CASE("missingness injection") {
    const GeneratorConfig g = scaled_to(complete(default_generator_config()), 50000);
    const Dataset full = generate_cohort(g, 4).data;
    CHECK(inject_missingness(full, MissingnessSpec{}, 1) == full);

    MissingnessSpec bmi;
    bmi.rate[kBmi] = 0.2079;
    const Dataset holed = inject_missingness(full, bmi, 1);
    std::size_t missing = 0;
    for (const auto& r : holed.records) missing += r.bmi_kg_m2 ? 0 : 1;
    CHECK(std::abs(static_cast<double>(missing) / 50000.0 - 0.2079) < 0.01);

    MissingnessSpec bad;
    bad.rate[kBmi] = 1.0;
    CHECK_THROWS_AS(inject_missingness(full, bad, 1), ValidationError);
    MissingnessSpec required;
    required.rate[kAge] = 0.1;
    CHECK_THROWS_AS(inject_missingness(full, required, 1), ValidationError);
  }

  TEST_CASE("oracle AUC of the default generator is pinned") {
    // Pairwise-count AUC over a complete 100k draw, seed 7.
    const GeneratorConfig g = scaled_to(complete(default_generator_config()), 100000);
    const Cohort c = generate_cohort(g, 7);
    const double auc = oracle_auc(g.risk, g.features, c.data);
    CHECK(auc == doctest::Approx(0.8668183529).epsilon(1e-9));
    CHECK(std::abs(auc - 0.87) < 0.02);
  }

  TEST_CASE("oracle AUC is perfect on a separated score") {
    GeneratorConfig g = complete(default_generator_config());
    g.risk.coefficients.fill(0.0);
    g.risk.coefficients[kAge] = 1.0;
    Dataset ds = generate_cohort(g, 2).data;
    for (auto& r : ds.records) r.diabetes = r.age_years > 57.1;
    CHECK(oracle_auc(g.risk, g.features, ds) == 1.0);
  }

  TEST_CASE("raising the HbA1c coefficient does not lower the oracle AUC") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      GeneratorConfig lo = scaled_to(complete(default_generator_config()), 20000);
      GeneratorConfig hi = lo;
      hi.risk.coefficients[kHba1c] += 0.5;
      const double a = oracle_auc(lo.risk, lo.features, generate_cohort(lo, seed).data);
      const double b = oracle_auc(hi.risk, hi.features, generate_cohort(hi, seed).data);
      CHECK(b >= a);
    }
  }

  TEST_CASE("config validation") {
    GeneratorConfig g = default_generator_config();
    g.provinces.push_back(g.provinces.front());
    CHECK_THROWS_AS(validate(g), ValidationError);
    g = default_generator_config();
    g.provinces.push_back({Province::NB, 10, 0.2});
    CHECK_THROWS_AS(validate(g), ValidationError);
    g = default_generator_config();
    g.features.positive_rate[kCopd] = 1.5;
    CHECK_THROWS_AS(validate(g), ValidationError);
  }
}

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "fedprov/schema.hpp"

namespace fedprov {

enum class Distribution { kNormal, kLogNormal };

/// Marginal of one continuous feature. Draws are clamped to [lo, hi].
struct ContinuousSpec {
  Distribution family = Distribution::kNormal;
  double mean = 0.0;
  double std = 1.0;
  double lo = 0.0;
  double hi = 1.0;
};

/// Marginals for every feature, indexed by Feature. Continuous slots use
/// `continuous`, binary slots use `positive_rate`; the other entry is ignored.
struct FeatureSpec {
  std::array<ContinuousSpec, kNumFeatures> continuous{};
  std::array<double, kNumFeatures> positive_rate{};
};

/// MCAR blanking rate per feature. Only the optional features may be nonzero.
struct MissingnessSpec {
  std::array<double, kNumFeatures> rate{};
};

struct ProvinceProfile {
  Province province = Province::AB;
  std::size_t n_patients = 0;
  double target_positive_rate = 0.0;
};

/// Ground-truth label mechanism: P(diabetes) = sigmoid(intercept + coeffs . z),
/// where z standardizes continuous features by the FeatureSpec mean/std and
/// leaves binaries as 0/1.
struct RiskModel {
  std::array<double, kNumFeatures> coefficients{};
  double intercept = 0.0;
};

struct GeneratorConfig {
  FeatureSpec features;
  MissingnessSpec missingness;
  std::vector<ProvinceProfile> provinces;
  RiskModel risk;
};

FeatureSpec default_feature_spec();
MissingnessSpec default_missingness_spec();
std::vector<ProvinceProfile> default_province_profiles();
RiskModel default_risk_model();
GeneratorConfig default_generator_config();

/// Copy of `cfg` with province sizes scaled so they sum to about `total`.
GeneratorConfig scaled_to(const GeneratorConfig& cfg, std::size_t total);

/// Throws ValidationError on out-of-range rates, bad clamp ranges, empty or
/// duplicated province profiles.
void validate(const GeneratorConfig& cfg);

/// Linear part of the risk model for one complete record (no intercept).
double risk_score(const RiskModel& risk, const FeatureSpec& features, const PatientRecord& r);

struct Cohort {
  Dataset data;
  /// Intercept each province ended up with after rate tuning.
  std::map<Province, double> intercepts;
};

/// Draws every province from its own substream of `seed`, tunes the intercept
/// per province by bisection on the realized positive rate, then injects
/// missingness. Deterministic given (cfg, seed).
Cohort generate_cohort(const GeneratorConfig& cfg, std::uint64_t seed);

/// Blanks each optional cell independently with its rate.
Dataset inject_missingness(const Dataset& ds, const MissingnessSpec& spec, std::uint64_t seed);

/// ROC-AUC of the ground-truth linear score against the realized labels.
/// Requires a complete dataset; throws on a single-class dataset.
double oracle_auc(const RiskModel& risk, const FeatureSpec& features, const Dataset& ds);

}  // namespace fedprov

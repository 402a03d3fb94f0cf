#include "fedprov/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "fedprov/evaluation.hpp"
#include "fedprov/log.hpp"
#include "fedprov/rng.hpp"

namespace fedprov {

FeatureSpec default_feature_spec() {
  FeatureSpec s;
  auto cont = [&](Feature f, Distribution family, double mean, double sd) {
    const ValueRange r = feature_range(f);
    s.continuous[f] = ContinuousSpec{family, mean, sd, r.lo, r.hi};
  };
  cont(kAge, Distribution::kNormal, 57.1, 14.39);
  cont(kSbp, Distribution::kNormal, 126.41, 16.01);
  cont(kBmi, Distribution::kNormal, 28.94, 6.44);
  cont(kLdl, Distribution::kNormal, 2.82, 0.95);
  cont(kHdl, Distribution::kNormal, 1.43, 0.45);
  cont(kHba1c, Distribution::kLogNormal, 5.936, 0.90);
  cont(kTg, Distribution::kLogNormal, 1.47, 0.98);

  s.positive_rate[kSexMale] = 0.4582;
  s.positive_rate[kHypertension] = 0.3951;
  s.positive_rate[kDepression] = 0.2140;
  s.positive_rate[kOsteoarthritis] = 0.1806;
  s.positive_rate[kCopd] = 0.0527;
  s.positive_rate[kHtnMed] = 0.4289;
  // The summary table gives "151 (12.98%)"; 151 of 11,631 is 1.3%, used here.
  s.positive_rate[kCorticosteroids] = 0.013;
  return s;
}

MissingnessSpec default_missingness_spec() {
  MissingnessSpec m;
  m.rate[kBmi] = 0.2079;
  m.rate[kLdl] = 0.0044;
  m.rate[kHdl] = 0.0003;
  m.rate[kHba1c] = 0.2834;
  m.rate[kTg] = 0.0005;
  return m;
}

std::vector<ProvinceProfile> default_province_profiles() {
  // Base rate 0.164 makes the pooled prevalence 0.1836 given the QC/NS skew.
  return {
      {Province::AB, 2600, 0.164}, {Province::BC, 900, 0.164},  {Province::MB, 1400, 0.164},
      {Province::NL, 1100, 0.164}, {Province::NS, 1200, 0.22},  {Province::ON, 3400, 0.164},
      {Province::QC, 1030, 0.32},
  };
}

RiskModel default_risk_model() {
  RiskModel r;
  r.coefficients[kHba1c] = 1.7;
  r.coefficients[kAge] = 0.45;
  r.coefficients[kBmi] = 0.5;
  r.coefficients[kSbp] = 0.2;
  r.coefficients[kTg] = 0.3;
  r.coefficients[kHypertension] = 0.35;
  r.coefficients[kHtnMed] = 0.35;
  r.coefficients[kHdl] = -0.35;
  r.intercept = 0.0;  // replaced per province by rate tuning
  return r;
}

GeneratorConfig default_generator_config() {
  return GeneratorConfig{default_feature_spec(), default_missingness_spec(),
                         default_province_profiles(), default_risk_model()};
}

GeneratorConfig scaled_to(const GeneratorConfig& cfg, std::size_t total) {
  GeneratorConfig out = cfg;
  std::size_t current = 0;
  for (const auto& p : cfg.provinces) current += p.n_patients;
  if (current == 0) return out;
  const double factor = static_cast<double>(total) / static_cast<double>(current);
  for (auto& p : out.provinces) {
    p.n_patients = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(p.n_patients) * factor)));
  }
  return out;
}

void validate(const GeneratorConfig& cfg) {
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const auto name = std::string(kFeatureNames[f]);
    if (is_continuous(f)) {
      const auto& c = cfg.features.continuous[f];
      if (!(c.std > 0.0) || !(c.lo < c.hi)) {
        throw ValidationError("feature '" + name + "': std must be > 0 and lo < hi");
      }
      if (c.family == Distribution::kLogNormal && !(c.mean > 0.0)) {
        throw ValidationError("feature '" + name + "': log-normal mean must be > 0");
      }
    } else {
      const double rate = cfg.features.positive_rate[f];
      if (!(rate >= 0.0 && rate <= 1.0)) {
        throw ValidationError("feature '" + name + "': positive rate must lie in [0, 1]");
      }
    }
    const double miss = cfg.missingness.rate[f];
    if (!is_optional(f) && miss != 0.0) {
      throw ValidationError("missingness rate given for non-optional feature '" + name + "'");
    }
    if (!(miss >= 0.0 && miss < 1.0)) {
      throw ValidationError("missingness rate for '" + name + "' must lie in [0, 1)");
    }
  }
  if (cfg.provinces.empty()) throw ValidationError("no province profiles configured");
  std::set<Province> seen;
  for (const auto& p : cfg.provinces) {
    const auto code = std::string(to_string(p.province));
    if (!is_fl_province(p.province)) {
      throw ValidationError("province " + code + " cannot be generated as a client");
    }
    if (!seen.insert(p.province).second) throw ValidationError("duplicate profile for " + code);
    if (p.n_patients == 0) throw ValidationError("province " + code + ": n_patients must be > 0");
    if (!(p.target_positive_rate > 0.0 && p.target_positive_rate < 1.0)) {
      throw ValidationError("province " + code + ": target positive rate must lie in (0, 1)");
    }
  }
}

namespace {

double draw_continuous(const ContinuousSpec& c, Rng& rng) {
  double v;
  if (c.family == Distribution::kNormal) {
    v = c.mean + c.std * standard_normal(rng);
  } else {
    const double sigma2 = std::log1p((c.std / c.mean) * (c.std / c.mean));
    const double mu = std::log(c.mean) - 0.5 * sigma2;
    v = std::exp(mu + std::sqrt(sigma2) * standard_normal(rng));
  }
  return std::clamp(v, c.lo, c.hi);
}

PatientRecord draw_record(const FeatureSpec& spec, Province province, Rng& rng) {
  std::array<double, kNumFeatures> row{};
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    row[f] = is_continuous(f) ? draw_continuous(spec.continuous[f], rng)
                              : (uniform01(rng) < spec.positive_rate[f] ? 1.0 : 0.0);
  }
  return decode_features(row, false, province);
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double realized_rate(double intercept, const std::vector<double>& scores,
                     const std::vector<double>& uniforms) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (uniforms[i] < sigmoid(intercept + scores[i])) ++pos;
  }
  return static_cast<double>(pos) / static_cast<double>(scores.size());
}

// Labels are u_i < sigmoid(b + s_i) with the u_i fixed, so the realized rate is
// monotone in b and bisection converges on it directly.
double tune_intercept(const std::vector<double>& scores, const std::vector<double>& uniforms,
                      double target) {
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (realized_rate(mid, scores, uniforms) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double gap_lo = std::abs(realized_rate(lo, scores, uniforms) - target);
  const double gap_hi = std::abs(realized_rate(hi, scores, uniforms) - target);
  return gap_lo < gap_hi ? lo : hi;
}

}  // namespace

double risk_score(const RiskModel& risk, const FeatureSpec& features, const PatientRecord& r) {
  const PartialRow row = encode_features(r);
  double s = 0.0;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const double coef = risk.coefficients[f];
    if (coef == 0.0) continue;
    if (!row[f]) throw ValidationError("risk_score needs a complete record");
    const double z = is_continuous(f)
                         ? (*row[f] - features.continuous[f].mean) / features.continuous[f].std
                         : *row[f];
    s += coef * z;
  }
  return s;
}

Cohort generate_cohort(const GeneratorConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  Cohort cohort;
  cohort.data.provenance = "synthetic-seed-" + std::to_string(seed);
  for (const auto& profile : cfg.provinces) {
    const std::size_t idx = fl_index(profile.province);
    Rng rng = make_rng(seed, "province", idx);

    Dataset part;
    part.records.reserve(profile.n_patients);
    std::vector<double> scores(profile.n_patients);
    std::vector<double> uniforms(profile.n_patients);
    for (std::size_t i = 0; i < profile.n_patients; ++i) {
      part.records.push_back(draw_record(cfg.features, profile.province, rng));
      scores[i] = risk_score(cfg.risk, cfg.features, part.records.back());
    }
    for (auto& u : uniforms) u = uniform01(rng);

    const double b = tune_intercept(scores, uniforms, profile.target_positive_rate);
    for (std::size_t i = 0; i < profile.n_patients; ++i) {
      part.records[i].diabetes = uniforms[i] < sigmoid(b + scores[i]);
    }
    const double achieved = realized_rate(b, scores, uniforms);
    if (std::abs(achieved - profile.target_positive_rate) > 0.01) {
      std::ostringstream msg;
      msg << "province " << to_string(profile.province) << ": positive rate " << achieved
          << " misses target " << profile.target_positive_rate << " by more than 0.01";
      log::warn(msg.str());
    }
    cohort.intercepts[profile.province] = b;

    part = inject_missingness(part, cfg.missingness, derive_seed(seed, "missingness", idx));
    cohort.data.records.insert(cohort.data.records.end(), part.records.begin(),
                               part.records.end());
  }
  return cohort;
}

Dataset inject_missingness(const Dataset& ds, const MissingnessSpec& spec, std::uint64_t seed) {
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    const auto name = std::string(kFeatureNames[f]);
    if (!is_optional(f) && spec.rate[f] != 0.0) {
      throw ValidationError("missingness rate given for non-optional feature '" + name + "'");
    }
    if (!(spec.rate[f] >= 0.0 && spec.rate[f] < 1.0)) {
      throw ValidationError("missingness rate for '" + name + "' must lie in [0, 1)");
    }
  }
  Rng rng = make_rng(seed, "mcar");
  Dataset out = ds;
  for (auto& r : out.records) {
    std::optional<double>* slots[] = {&r.bmi_kg_m2, &r.ldl_mmol_L, &r.hdl_mmol_L, &r.hba1c_pct,
                                      &r.tg_mmol_L};
    constexpr Feature kSlots[] = {kBmi, kLdl, kHdl, kHba1c, kTg};
    for (std::size_t k = 0; k < 5; ++k) {
      // One draw per cell regardless of rate keeps streams aligned across configs.
      const double u = uniform01(rng);
      if (u < spec.rate[kSlots[k]]) slots[k]->reset();
    }
  }
  return out;
}

double oracle_auc(const RiskModel& risk, const FeatureSpec& features, const Dataset& ds) {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(ds.size());
  labels.reserve(ds.size());
  for (const auto& r : ds.records) {
    scores.push_back(risk.intercept + risk_score(risk, features, r));
    labels.push_back(r.diabetes ? 1 : 0);
  }
  return roc_auc(scores, labels);
}

}  // namespace fedprov

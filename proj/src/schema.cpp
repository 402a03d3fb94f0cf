#include "fedprov/schema.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fedprov/log.hpp"
#include "fedprov/rng.hpp"

namespace fedprov {

ValueRange feature_range(std::size_t feature) {
  switch (feature) {
    case kAge: return {18.0, 99.0};
    case kSbp: return {69.0, 218.0};
    case kBmi: return {11.0, 66.48};
    case kLdl: return {0.0, 8.81};
    case kHdl: return {0.18, 6.78};
    case kHba1c: return {4.0, 17.9};
    case kTg: return {0.2, 25.57};
    default: return {0.0, 1.0};
  }
}

std::string_view to_string(Province p) {
  switch (p) {
    case Province::AB: return "AB";
    case Province::BC: return "BC";
    case Province::MB: return "MB";
    case Province::NL: return "NL";
    case Province::NS: return "NS";
    case Province::ON: return "ON";
    case Province::QC: return "QC";
    case Province::NB: return "NB";
    case Province::PEI: return "PE";
  }
  return "??";
}

Province parse_province(std::string_view code) {
  static constexpr std::array<Province, 9> kAll = {
      Province::AB, Province::BC, Province::MB, Province::NL, Province::NS,
      Province::ON, Province::QC, Province::NB, Province::PEI};
  for (Province p : kAll) {
    if (code == to_string(p)) return p;
  }
  if (code == "PEI") return Province::PEI;
  throw ValidationError("unknown province code '" + std::string(code) + "'");
}

bool is_fl_province(Province p) { return p != Province::NB && p != Province::PEI; }

std::size_t fl_index(Province p) {
  const auto it = std::find(kFlProvinces.begin(), kFlProvinces.end(), p);
  if (it == kFlProvinces.end()) {
    throw ValidationError("province " + std::string(to_string(p)) +
                          " does not take part in federated training");
  }
  return static_cast<std::size_t>(it - kFlProvinces.begin());
}

namespace {

void check_range(std::size_t feature, double value) {
  const auto name = std::string(kFeatureNames[feature]);
  if (!std::isfinite(value)) throw ValidationError("field '" + name + "' is not finite");
  const ValueRange r = feature_range(feature);
  if (value < r.lo || value > r.hi) {
    std::ostringstream msg;
    msg << "field '" << name << "' = " << value << " outside [" << r.lo << ", " << r.hi << "]";
    throw ValidationError(msg.str());
  }
}

}  // namespace

void validate(const PatientRecord& r) {
  const PartialRow row = encode_features(r);
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (row[f] && is_continuous(f)) check_range(f, *row[f]);
  }
}

PartialRow encode_features(const PatientRecord& r) {
  auto bin = [](bool b) { return std::optional<double>(b ? 1.0 : 0.0); };
  return PartialRow{r.age_years,     bin(r.sex_male),     r.sbp_mmHg,        r.bmi_kg_m2,
                    r.ldl_mmol_L,    r.hdl_mmol_L,        r.hba1c_pct,       r.tg_mmol_L,
                    bin(r.hypertension), bin(r.depression), bin(r.osteoarthritis),
                    bin(r.copd),     bin(r.htn_med),      bin(r.corticosteroids)};
}

PatientRecord decode_features(const std::array<double, kNumFeatures>& row, bool diabetes,
                              Province province) {
  auto cont = [&](std::size_t f) {
    const ValueRange r = feature_range(f);
    return std::clamp(row[f], r.lo, r.hi);
  };
  auto bin = [&](std::size_t f) { return row[f] >= 0.5; };
  PatientRecord r;
  r.age_years = cont(kAge);
  r.sex_male = bin(kSexMale);
  r.sbp_mmHg = cont(kSbp);
  r.bmi_kg_m2 = cont(kBmi);
  r.ldl_mmol_L = cont(kLdl);
  r.hdl_mmol_L = cont(kHdl);
  r.hba1c_pct = cont(kHba1c);
  r.tg_mmol_L = cont(kTg);
  r.hypertension = bin(kHypertension);
  r.depression = bin(kDepression);
  r.osteoarthritis = bin(kOsteoarthritis);
  r.copd = bin(kCopd);
  r.htn_med = bin(kHtnMed);
  r.corticosteroids = bin(kCorticosteroids);
  r.diabetes = diabetes;
  r.province = province;
  return r;
}

PartialMatrix to_partial_matrix(const Dataset& ds) {
  PartialMatrix m;
  m.rows.reserve(ds.size());
  m.labels.reserve(ds.size());
  for (const auto& r : ds.records) {
    m.rows.push_back(encode_features(r));
    m.labels.push_back(r.diabetes ? 1.0 : 0.0);
  }
  return m;
}

LabeledMatrix::LabeledMatrix(Eigen::MatrixXd features, Eigen::VectorXd labels)
    : x(std::move(features)), y(std::move(labels)) {
  if (x.rows() != y.size()) throw ValidationError("feature/label row count mismatch");
  if (x.cols() != static_cast<Eigen::Index>(kNumFeatures)) {
    throw ValidationError("feature matrix must have 14 columns");
  }
}

std::size_t LabeledMatrix::positives() const {
  return static_cast<std::size_t>((y.array() > 0.5).count());
}

LabeledMatrix LabeledMatrix::select(const std::vector<std::size_t>& indices) const {
  Eigen::MatrixXd xs(static_cast<Eigen::Index>(indices.size()), x.cols());
  Eigen::VectorXd ys(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(indices[i]);
    xs.row(static_cast<Eigen::Index>(i)) = x.row(src);
    ys(static_cast<Eigen::Index>(i)) = y(src);
  }
  return LabeledMatrix(std::move(xs), std::move(ys));
}

LabeledMatrix concat(const std::vector<const LabeledMatrix*>& parts) {
  Eigen::Index n = 0;
  for (const auto* p : parts) n += p->x.rows();
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kNumFeatures));
  Eigen::VectorXd y(n);
  Eigen::Index at = 0;
  for (const auto* p : parts) {
    x.middleRows(at, p->x.rows()) = p->x;
    y.segment(at, p->y.size()) = p->y;
    at += p->x.rows();
  }
  return LabeledMatrix(std::move(x), std::move(y));
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double fraction,
                                             std::uint64_t seed) {
  if (ds.empty()) throw ValidationError("cannot split an empty dataset");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("train fraction must lie in (0, 1]");
  }
  Rng rng = make_rng(seed, "split");
  const auto order = shuffled_indices(ds.size(), rng);
  const auto n_train =
      static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size())));
  Dataset train{{}, ds.provenance + "/train"};
  Dataset test{{}, ds.provenance + "/test"};
  train.records.reserve(n_train);
  test.records.reserve(ds.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? train : test).records.push_back(ds.records[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

ProvincePartition partition_by_province(const Dataset& ds) {
  ProvincePartition out;
  for (const auto& r : ds.records) {
    if (!is_fl_province(r.province)) {
      ++out.excluded;
      continue;
    }
    auto& part = out.parts[r.province];
    if (part.provenance.empty()) {
      part.provenance = ds.provenance + "/" + std::string(to_string(r.province));
    }
    part.records.push_back(r);
  }
  if (out.excluded > 0) {
    log::info("partition_by_province: excluded " + std::to_string(out.excluded) +
              " NB/PEI records");
  }
  return out;
}

Standardizer standardize_fit(const LabeledMatrix& m) {
  if (m.empty()) throw ValidationError("cannot fit a standardizer on an empty matrix");
  Standardizer s;
  const double n = static_cast<double>(m.size());
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (!is_continuous(f)) {
      s.mean[f] = 0.0;
      s.std[f] = 1.0;
      continue;
    }
    const auto col = m.x.col(static_cast<Eigen::Index>(f));
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / n;
    double sd = std::sqrt(var);
    if (!(sd > kStdFloor)) {
      sd = kStdFloor;
      s.floored.push_back(f);
      log::warn("standardize_fit: column '" + std::string(kFeatureNames[f]) +
                "' is constant; std floored at 1e-8");
    }
    s.mean[f] = mean;
    s.std[f] = sd;
  }
  return s;
}

Eigen::MatrixXd standardize_apply(const Standardizer& s, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out = x;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (!is_continuous(f)) continue;
    auto col = out.col(static_cast<Eigen::Index>(f));
    col = (col.array() - s.mean[f]) / s.std[f];
  }
  return out;
}

LabeledMatrix standardize_apply(const Standardizer& s, const LabeledMatrix& m) {
  return LabeledMatrix(standardize_apply(s, m.x), m.y);
}

}  // namespace fedprov

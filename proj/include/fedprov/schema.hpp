#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace fedprov {

/// Raised for malformed inputs and invalid configuration. The CLI maps it to
/// exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kNumFeatures = 14;

/// Column order shared by every matrix, gradient and standardizer.
enum Feature : std::size_t {
  kAge = 0,
  kSexMale,
  kSbp,
  kBmi,
  kLdl,
  kHdl,
  kHba1c,
  kTg,
  kHypertension,
  kDepression,
  kOsteoarthritis,
  kCopd,
  kHtnMed,
  kCorticosteroids,
};

/// CSV column names, in feature order.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "age",          "sex_male",     "sbp",          "bmi",
    "ldl",          "hdl",          "hba1c",        "tg",
    "hypertension", "depression",   "osteoarthritis", "copd",
    "htn_med",      "corticosteroids"};

/// Age, sBP, BMI, LDL, HDL, HbA1c and TG. Everything else is binary.
constexpr bool is_continuous(std::size_t feature) {
  return feature == kAge || feature == kSbp || feature == kBmi || feature == kLdl ||
         feature == kHdl || feature == kHba1c || feature == kTg;
}

/// The five features that may be missing.
constexpr bool is_optional(std::size_t feature) {
  return feature == kBmi || feature == kLdl || feature == kHdl || feature == kHba1c ||
         feature == kTg;
}

struct ValueRange {
  double lo;
  double hi;
};

/// Valid range of each continuous feature (cohort summary ranges).
ValueRange feature_range(std::size_t feature);

enum class Province { AB, BC, MB, NL, NS, ON, QC, NB, PEI };

/// The seven provinces that take part in federated training, in client order.
inline constexpr std::array<Province, 7> kFlProvinces = {
    Province::AB, Province::BC, Province::MB, Province::NL,
    Province::NS, Province::ON, Province::QC};

std::string_view to_string(Province p);
/// Throws ValidationError naming the code when it is not recognized.
Province parse_province(std::string_view code);
bool is_fl_province(Province p);
/// Index in kFlProvinces; throws for NB/PEI.
std::size_t fl_index(Province p);

struct PatientRecord {
  double age_years = 18.0;
  bool sex_male = false;
  double sbp_mmHg = 120.0;
  std::optional<double> bmi_kg_m2;
  std::optional<double> ldl_mmol_L;
  std::optional<double> hdl_mmol_L;
  std::optional<double> hba1c_pct;
  std::optional<double> tg_mmol_L;
  bool hypertension = false;
  bool depression = false;
  bool osteoarthritis = false;
  bool copd = false;
  bool htn_med = false;
  bool corticosteroids = false;
  bool diabetes = false;
  Province province = Province::AB;

  bool operator==(const PatientRecord&) const = default;
};

using PartialRow = std::array<std::optional<double>, kNumFeatures>;

/// Checks the record invariants; throws ValidationError naming the field.
void validate(const PatientRecord& record);

/// Encodes a record in feature order. Missing optional fields stay empty.
PartialRow encode_features(const PatientRecord& record);

/// Inverse of encode_features. Continuous values are clamped into their valid
/// range; binary slots are thresholded at 0.5.
PatientRecord decode_features(const std::array<double, kNumFeatures>& row, bool diabetes,
                              Province province);

struct Dataset {
  std::vector<PatientRecord> records;
  std::string provenance;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  bool operator==(const Dataset&) const = default;
};

/// Rows of possibly-missing feature values plus labels. Imputation input.
struct PartialMatrix {
  std::vector<PartialRow> rows;
  std::vector<double> labels;

  std::size_t size() const { return rows.size(); }
};

PartialMatrix to_partial_matrix(const Dataset& ds);

/// Complete numeric design matrix with a parallel label vector.
struct LabeledMatrix {
  Eigen::MatrixXd x;  // n x kNumFeatures
  Eigen::VectorXd y;  // n, values in {0, 1}

  LabeledMatrix() : x(0, static_cast<Eigen::Index>(kNumFeatures)), y(0) {}
  LabeledMatrix(Eigen::MatrixXd features, Eigen::VectorXd labels);

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  bool empty() const { return y.size() == 0; }
  std::size_t positives() const;

  /// Rows in the order given by `indices`.
  LabeledMatrix select(const std::vector<std::size_t>& indices) const;

  static constexpr const std::array<std::string_view, kNumFeatures>& column_names() {
    return kFeatureNames;
  }
};

/// Concatenates matrices in argument order.
LabeledMatrix concat(const std::vector<const LabeledMatrix*>& parts);

/// Shuffles with a seeded RNG, then puts round(fraction * n) records in train.
std::pair<Dataset, Dataset> split_train_test(const Dataset& ds, double fraction,
                                             std::uint64_t seed);

struct ProvincePartition {
  std::map<Province, Dataset> parts;
  std::size_t excluded = 0;  // NB/PEI records dropped
};

ProvincePartition partition_by_province(const Dataset& ds);

/// Z-score parameters for the continuous columns; binary columns carry
/// mean 0 / std 1 so that applying them is the identity.
struct Standardizer {
  std::array<double, kNumFeatures> mean{};
  std::array<double, kNumFeatures> std{};
  std::vector<std::size_t> floored;  // columns whose std hit the floor

  bool operator==(const Standardizer&) const = default;
};

inline constexpr double kStdFloor = 1e-8;

Standardizer standardize_fit(const LabeledMatrix& m);
LabeledMatrix standardize_apply(const Standardizer& s, const LabeledMatrix& m);
Eigen::MatrixXd standardize_apply(const Standardizer& s, const Eigen::MatrixXd& x);

}  // namespace fedprov

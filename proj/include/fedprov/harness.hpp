#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedprov/evaluation.hpp"
#include "fedprov/fedavg.hpp"
#include "fedprov/imputation.hpp"
#include "fedprov/models.hpp"
#include "fedprov/synth.hpp"

namespace fedprov {

enum class Strategy { kNone, kDownsample };

std::string_view to_string(Strategy s);
/// Accepts "none" and "downsample".
Strategy parse_strategy(std::string_view name);

inline constexpr std::string_view kCentralSource = "CML";
inline constexpr std::string_view kFederatedSource = "FL";
inline constexpr std::string_view kGlobalTest = "GLOBAL";

/// Model sources evaluated on the less-sampled provincial test sets, and those sets.
inline constexpr std::array<std::string_view, 4> kCrossSources = {"AB", "ON", "CML", "FL"};
inline constexpr std::array<Province, 4> kCrossTestSets = {Province::BC, Province::MB,
                                                           Province::NS, Province::QC};

struct ExperimentConfig {
  GeneratorConfig generator = default_generator_config();
  std::vector<ModelFamily> families = {ModelFamily::kLogistic, ModelFamily::kMlp};
  std::vector<Strategy> strategies = {Strategy::kNone, Strategy::kDownsample};
  /// Train and report the seven provincial models as well as CML and FL.
  bool include_local = true;
  std::map<ModelFamily, TrainConfig> train = {
      {ModelFamily::kLogistic, default_train_config(ModelFamily::kLogistic)},
      {ModelFamily::kMlp, default_train_config(ModelFamily::kMlp)}};
  /// Round structure for FL; the local step rule comes from `train`.
  FedConfig fed;
  MiceConfig mice;
  double split_fraction = 0.7;
  std::vector<std::uint64_t> seeds = {1};
  std::size_t calibration_bins = 10;
  /// Seeds processed concurrently.
  std::size_t jobs = 1;
  std::filesystem::path output_dir = "fedprov-out";
};

/// Throws ValidationError for an empty family/strategy/seed list, a bad split
/// fraction or any invalid nested config.
void validate(const ExperimentConfig& cfg);

struct CellKey {
  ModelFamily family = ModelFamily::kLogistic;
  std::string source;    // AB..QC, CML or FL
  Strategy strategy = Strategy::kNone;
  std::string test_set;  // GLOBAL or BC/MB/NS/QC

  auto operator<=>(const CellKey&) const = default;
};

struct CalibrationKey {
  ModelFamily family = ModelFamily::kLogistic;
  Strategy strategy = Strategy::kNone;
  std::string source;  // CML or FL

  auto operator<=>(const CalibrationKey&) const = default;
};

struct CellFailure {
  std::uint64_t seed = 0;
  CellKey key;
  std::string reason;
};

struct MetricSummary {
  MetricsRow mean;
  MetricsRow std;  // sample standard deviation over seeds; 0 for one seed
  std::size_t n = 0;
};

struct ReportTable {
  std::vector<std::uint64_t> seeds;
  /// Per-seed metrics, in seed order.
  std::map<CellKey, std::vector<MetricsRow>> cells;
  /// Curves on the global test set from the first seed.
  std::map<CalibrationKey, CalibrationCurve> calibration;
  std::vector<CellFailure> failures;

  MetricSummary summary(const CellKey& key) const;
};

/// Everything one replication seed produces.
struct SeedResult {
  std::uint64_t seed = 0;
  std::map<CellKey, MetricsRow> cells;
  std::map<CalibrationKey, CalibrationCurve> calibration;
  std::vector<CellFailure> failures;
};

/// The full pipeline for one seed: generate, partition, split per province,
/// impute train and test separately per province, then train and evaluate the
/// local, CML and FL models for every family and strategy.
SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// run_seed for every configured seed, assembled in seed order.
ReportTable run_matrix(const ExperimentConfig& cfg);

enum class ReportFormat { kCsv, kMarkdown };

/// Writes one file per (family, layout) into `dir`, a seed-variance file and,
/// when any cell failed, a failures file. Returns the paths written.
std::vector<std::filesystem::path> emit_report(const ReportTable& t, ReportFormat format,
                                               const std::filesystem::path& dir);

/// One points CSV and one SVG per (family, strategy, source).
std::vector<std::filesystem::path> emit_calibration(const ReportTable& t,
                                                    const std::filesystem::path& dir);

/// Per-seed rows as JSON lines, the input of `report`.
std::filesystem::path emit_results(const ReportTable& t, const std::filesystem::path& dir);
ReportTable load_results(const std::filesystem::path& path);

/// Published reference values for the global-test and cross-test layouts,
/// printed beside synthetic results. Empty when the cell has no reference.
std::optional<MetricsRow> published_reference(const CellKey& key);

}  // namespace fedprov

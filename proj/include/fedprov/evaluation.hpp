#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedprov/schema.hpp"

namespace fedprov {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

struct MetricsRow {
  double auc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  /// Set when the corresponding denominator was zero and the value is a
  /// placeholder 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

inline constexpr double kDefaultThreshold = 0.5;

/// Predicts positive iff prob >= threshold.
ConfusionCounts confusion_at_threshold(std::span<const double> probs, std::span<const int> labels,
                                       double threshold = kDefaultThreshold);

/// Fills precision, recall and f1. auc is left at 0.
MetricsRow precision_recall_f1(const ConfusionCounts& c);

/// Area under the ROC curve by trapezoid integration over distinct score
/// thresholds. Tied scores form one step, which makes the result equal to the
/// concordance statistic exactly. Throws ValidationError if only one class is
/// present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// AUC, F1, precision and recall at the given threshold.
MetricsRow evaluate_predictions(std::span<const double> probs, std::span<const int> labels,
                                double threshold = kDefaultThreshold);

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  std::optional<double> mean_pred;  // empty when count == 0
  std::optional<double> obs_frac;
};

struct CalibrationCurve {
  std::vector<CalibrationBin> bins;
  double ece = 0.0;
};

/// Equal-width bins on [0, 1]; the last bin is closed on the right.
CalibrationCurve calibration_curve(std::span<const double> probs, std::span<const int> labels,
                                   std::size_t n_bins = 10);

/// Keeps every minority row and a uniform subsample of the majority class of
/// the same size, then shuffles. Deterministic given seed.
LabeledMatrix downsample_majority(const LabeledMatrix& data, std::uint64_t seed);

/// Labels of a matrix as ints.
std::vector<int> int_labels(const LabeledMatrix& m);

}  // namespace fedprov

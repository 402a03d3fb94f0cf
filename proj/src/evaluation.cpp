#include "fedprov/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedprov/rng.hpp"

namespace fedprov {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ValidationError("probabilities and labels differ in length");
  if (a == 0) throw ValidationError("no predictions to evaluate");
}

}  // namespace

ConfusionCounts confusion_at_threshold(std::span<const double> probs, std::span<const int> labels,
                                       double threshold) {
  check_lengths(probs.size(), labels.size());
  ConfusionCounts c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool predicted = probs[i] >= threshold;
    const bool actual = labels[i] != 0;
    if (predicted && actual) {
      ++c.tp;
    } else if (predicted) {
      ++c.fp;
    } else if (actual) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

MetricsRow precision_recall_f1(const ConfusionCounts& c) {
  MetricsRow m;
  if (c.tp + c.fp > 0) {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  } else {
    m.precision_undefined = true;
  }
  if (c.tp + c.fn > 0) {
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  } else {
    m.recall_undefined = true;
  }
  const double denom = m.precision + m.recall;
  m.f1 = denom > 0.0 ? 2.0 * m.precision * m.recall / denom : 0.0;
  return m;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Walk thresholds from high to low. Each group of equal scores moves the ROC
  // point by (fp_g, tp_g); the trapezoid under that segment, doubled, is
  // fp_g * (2 * tp_before + tp_g). Integer accumulation keeps it exact.
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t twice_area = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::uint64_t tp_g = 0;
    std::uint64_t fp_g = 0;
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] != 0 ? tp_g : fp_g) += 1;
      ++i;
    }
    twice_area += fp_g * (2 * tp + tp_g);
    tp += tp_g;
    fp += fp_g;
  }
  if (tp == 0 || fp == 0) {
    throw ValidationError("AUC is undefined when only one class is present");
  }
  return static_cast<double>(twice_area) / (2.0 * static_cast<double>(tp) * static_cast<double>(fp));
}

MetricsRow evaluate_predictions(std::span<const double> probs, std::span<const int> labels,
                                double threshold) {
  MetricsRow m = precision_recall_f1(confusion_at_threshold(probs, labels, threshold));
  m.auc = roc_auc(probs, labels);
  return m;
}

CalibrationCurve calibration_curve(std::span<const double> probs, std::span<const int> labels,
                                   std::size_t n_bins) {
  check_lengths(probs.size(), labels.size());
  if (n_bins < 2) throw ValidationError("calibration needs at least 2 bins");
  std::vector<double> sum_pred(n_bins, 0.0);
  std::vector<double> sum_pos(n_bins, 0.0);
  std::vector<std::size_t> count(n_bins, 0);
  const auto width = static_cast<double>(n_bins);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("probability outside [0, 1]");
    const auto b = std::min(static_cast<std::size_t>(p * width), n_bins - 1);
    sum_pred[b] += p;
    sum_pos[b] += labels[i] != 0 ? 1.0 : 0.0;
    ++count[b];
  }
  CalibrationCurve curve;
  const auto n = static_cast<double>(probs.size());
  for (std::size_t b = 0; b < n_bins; ++b) {
    CalibrationBin bin;
    bin.lo = static_cast<double>(b) / width;
    bin.hi = static_cast<double>(b + 1) / width;
    bin.count = count[b];
    if (count[b] > 0) {
      const auto c = static_cast<double>(count[b]);
      bin.mean_pred = sum_pred[b] / c;
      bin.obs_frac = sum_pos[b] / c;
      curve.ece += (c / n) * std::abs(*bin.mean_pred - *bin.obs_frac);
    }
    curve.bins.push_back(bin);
  }
  return curve;
}

LabeledMatrix downsample_majority(const LabeledMatrix& data, std::uint64_t seed) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (Eigen::Index i = 0; i < data.y.size(); ++i) {
    (data.y(i) > 0.5 ? pos : neg).push_back(static_cast<std::size_t>(i));
  }
  if (pos.empty() || neg.empty()) {
    throw ValidationError("downsampling needs both classes present");
  }
  Rng rng = make_rng(seed, "downsample");
  auto& majority = pos.size() > neg.size() ? pos : neg;
  const auto& minority = pos.size() > neg.size() ? neg : pos;
  shuffle(majority, rng);
  majority.resize(minority.size());

  // Back to original row order before the final shuffle so the output depends
  // only on which rows were kept.
  std::vector<std::size_t> keep = pos;
  keep.insert(keep.end(), neg.begin(), neg.end());
  std::sort(keep.begin(), keep.end());
  shuffle(keep, rng);
  return data.select(keep);
}

std::vector<int> int_labels(const LabeledMatrix& m) {
  std::vector<int> out(m.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.y(static_cast<Eigen::Index>(i)) > 0.5;
  return out;
}

}  // namespace fedprov

#include <algorithm>

#include "doctest.h"

#include "fedprov/evaluation.hpp"
#include "support.hpp"

using namespace fedprov;

namespace {

LabeledMatrix class_counts(std::size_t neg, std::size_t pos) {
  const auto n = static_cast<Eigen::Index>(neg + pos);
  LabeledMatrix m(Eigen::MatrixXd::Zero(n, 14), Eigen::VectorXd::Zero(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    m.x(i, 0) = static_cast<double>(i);
    m.y(i) = static_cast<std::size_t>(i) >= neg ? 1.0 : 0.0;
  }
  return m;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("confusion counts") {
    const std::vector<double> p = {0.9, 0.2};
    const std::vector<int> y = {1, 0};
    CHECK(confusion_at_threshold(p, y) == ConfusionCounts{1, 0, 1, 0});
    const std::vector<double> half = {0.5};
    const std::vector<int> neg = {0};
    CHECK(confusion_at_threshold(half, neg).fp == 1);
    const std::vector<double> low = {0.1, 0.2, 0.49};
    const std::vector<int> zeros = {0, 0, 0};
    CHECK(confusion_at_threshold(low, zeros) == ConfusionCounts{0, 0, 3, 0});
    CHECK_THROWS_AS(confusion_at_threshold(low, y), ValidationError);
  }

  TEST_CASE("precision, recall and F1") {
    const std::vector<double> p = {1, 1, 0};
    const std::vector<int> y = {1, 0, 1};
    const MetricsRow m = precision_recall_f1(confusion_at_threshold(p, y));
    CHECK(m.precision == 0.5);
    CHECK(m.recall == 0.5);
    CHECK(m.f1 == 0.5);

    const MetricsRow perfect = precision_recall_f1({4, 0, 0, 0});
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);

    const MetricsRow none = precision_recall_f1({0, 0, 3, 2});
    CHECK(none.precision_undefined);
    CHECK(none.precision == 0.0);
    CHECK(none.recall == 0.0);
    CHECK(none.f1 == 0.0);
  }

  TEST_CASE("AUC closed forms") {
    CHECK(roc_auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
    CHECK(roc_auc(std::vector<double>{0.9, 0.8, 0.3}, std::vector<int>{1, 0, 1}) == 0.5);
    CHECK(roc_auc(std::vector<double>{0.4, 0.4, 0.4, 0.4}, std::vector<int>{1, 0, 0, 1}) == 0.5);
    CHECK(roc_auc(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) == 0.5);
    CHECK(roc_auc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0}) == 0.0);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 1}), ValidationError);
  }

  TEST_CASE("AUC equals the pairwise concordance oracle") {
    Rng rng = make_rng(1, "auc");
    for (int inst = 0; inst < 200; ++inst) {
      const std::size_t n = 2 + uniform_index(rng, 49);
      std::vector<double> s(n);
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        // Coarse scores so ties are common.
        s[i] = static_cast<double>(uniform_index(rng, 6)) / 5.0;
        y[i] = uniform01(rng) < 0.4 ? 1 : 0;
      }
      y[0] = 1;
      y[1] = 0;
      CHECK(std::abs(roc_auc(s, y) - fedprov::testing::pairwise_auc(s, y)) <= 1e-12);
    }
  }

  TEST_CASE("calibration of constant and miscalibrated predictors") {
    const std::vector<double> half(100, 0.5);
    std::vector<int> balanced(100);
    for (std::size_t i = 0; i < 100; ++i) balanced[i] = static_cast<int>(i % 2);
    const CalibrationCurve c = calibration_curve(half, balanced);
    REQUIRE(c.bins.size() == 10);
    std::size_t occupied = 0;
    for (const auto& b : c.bins) {
      if (b.count == 0) {
        CHECK_FALSE(b.mean_pred.has_value());
        continue;
      }
      ++occupied;
      CHECK(*b.mean_pred == 0.5);
      CHECK(*b.obs_frac == 0.5);
    }
    CHECK(occupied == 1);
    CHECK(c.ece == doctest::Approx(0.0));

    const std::vector<double> high(50, 0.9);
    const std::vector<int> negatives(50, 0);
    const CalibrationCurve m = calibration_curve(high, negatives);
    CHECK(m.ece == doctest::Approx(0.9));
    for (const auto& b : m.bins) {
      if (b.count > 0) CHECK(*b.obs_frac == 0.0);
    }

    // p = 1.0 lands in the closed last bin.
    const CalibrationCurve edge = calibration_curve(std::vector<double>{1.0}, std::vector<int>{1});
    CHECK(edge.bins.back().count == 1);
    CHECK_THROWS_AS(calibration_curve(high, negatives, 1), ValidationError);
  }

  TEST_CASE("well-specified logistic model is calibrated") {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(14);
    w(0) = 1.2;
    w(1) = -0.8;
    w(2) = 0.5;
    const LabeledMatrix train = fedprov::testing::logistic_data(20000, w, -0.5, 1);
    const LabeledMatrix test = fedprov::testing::logistic_data(20000, w, -0.5, 2);
    TrainConfig cfg = default_train_config(ModelFamily::kLogistic);
    cfg.epochs = 50;
    const auto probs = predict(flatten(train_logistic(train, cfg)), test.x);
    const CalibrationCurve c = calibration_curve(probs, int_labels(test));
    CHECK(c.ece < 0.05);
    for (const auto& b : c.bins) {
      if (b.count >= 200) CHECK(std::abs(*b.mean_pred - *b.obs_frac) < 0.05);
    }
  }

  TEST_CASE("downsampling keeps the minority and matches its size") {
    const LabeledMatrix a = downsample_majority(class_counts(80, 20), 1);
    CHECK(a.size() == 40);
    CHECK(a.positives() == 20);

    const LabeledMatrix b = downsample_majority(class_counts(3, 5), 1);
    CHECK(b.size() == 6);
    CHECK(b.positives() == 3);

    const LabeledMatrix even = class_counts(10, 10);
    const LabeledMatrix c = downsample_majority(even, 4);
    std::vector<double> before(even.x.col(0).data(), even.x.col(0).data() + 20);
    std::vector<double> after(c.x.col(0).data(), c.x.col(0).data() + 20);
    std::sort(after.begin(), after.end());
    CHECK(before == after);

    CHECK(downsample_majority(class_counts(80, 20), 9).x ==
          downsample_majority(class_counts(80, 20), 9).x);
    // Every kept positive is an original positive row.
    for (Eigen::Index i = 0; i < a.x.rows(); ++i) CHECK((a.x(i, 0) >= 80) == (a.y(i) == 1.0));
  }
}

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "fedprov/models.hpp"
#include "fedprov/rng.hpp"
#include "fedprov/schema.hpp"

namespace fedprov::testing {

/// Fraction of (positive, negative) pairs ranked correctly, ties counting half.
inline double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      den += 1.0;
      if (s[i] > s[j]) num += 1.0;
      else if (s[i] == s[j]) num += 0.5;
    }
  }
  return num / den;
}

/// n rows of standard-normal features with labels from a logistic model.
inline LabeledMatrix logistic_data(std::size_t n, const Eigen::VectorXd& w, double b,
                                   std::uint64_t seed) {
  Rng rng = make_rng(seed, "logistic-data");
  LabeledMatrix m(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 14),
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  for (Eigen::Index i = 0; i < m.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < 14; ++j) m.x(i, j) = standard_normal(rng);
    const double p = sigmoid(m.x.row(i).dot(w) + b);
    m.y(i) = uniform01(rng) < p ? 1.0 : 0.0;
  }
  return m;
}

/// Random batch with every label class present.
inline LabeledMatrix random_batch(std::size_t n, Rng& rng) {
  LabeledMatrix m(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 14),
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  for (Eigen::Index i = 0; i < m.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < 14; ++j) m.x(i, j) = standard_normal(rng);
    m.y(i) = static_cast<double>(i % 2);
  }
  return m;
}

/// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-4),
/// numeric by central differences with step h. The floor keeps near-zero
/// entries from turning round-off into a large ratio.
inline double gradient_error(const Eigen::VectorXd& at, const Eigen::VectorXd& analytic,
                             const std::function<double(const Eigen::VectorXd&)>& loss,
                             double h = 1e-5) {
  double worst = 0.0;
  Eigen::VectorXd p = at;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    p(i) = at(i) + h;
    const double up = loss(p);
    p(i) = at(i) - h;
    const double down = loss(p);
    p(i) = at(i);
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({1e-4, std::abs(analytic(i)), std::abs(numeric)});
    worst = std::max(worst, std::abs(analytic(i) - numeric) / scale);
  }
  return worst;
}

/// XOR on the signs of the first two columns; the others are zero.
inline LabeledMatrix xor_data(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, "xor");
  LabeledMatrix m(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 14),
                  Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)));
  for (Eigen::Index i = 0; i < m.x.rows(); ++i) {
    const double a = 2.0 * uniform01(rng) - 1.0;
    const double b = 2.0 * uniform01(rng) - 1.0;
    m.x(i, 0) = a;
    m.x(i, 1) = b;
    m.y(i) = (a > 0) != (b > 0) ? 1.0 : 0.0;
  }
  return m;
}

inline double accuracy(const std::vector<double>& probs, const Eigen::VectorXd& y) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if ((probs[i] >= 0.5) == (y(static_cast<Eigen::Index>(i)) > 0.5)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(probs.size());
}

/// Smooth mean BCE of a logistic parameter vector over a full matrix.
inline double lr_smooth_loss(const ParamVector& p, const LabeledMatrix& m) {
  return lr_loss_and_grad(unflatten_logistic(p), m).loss;
}

/// Unpenalized optimum of the mean BCE by long-run full-batch gradient descent.
inline double lr_optimum_by_gd(const LabeledMatrix& m, std::size_t steps, double lr) {
  LogisticModel model;
  for (std::size_t s = 0; s < steps; ++s) {
    const LossAndGrad lg = lr_loss_and_grad(model, m);
    model.weights -= lr * lg.grad.values.head(14);
    model.intercept -= lr * lg.grad.values(14);
  }
  return lr_loss_and_grad(model, m).loss;
}

struct McarFixture {
  Eigen::MatrixXd complete;
  PartialMatrix partial;
  std::vector<std::size_t> holes;
};

// 14 correlated Gaussian columns sharing one latent factor, means 10..23;
// 20% of the BMI column blanked completely at random.
inline McarFixture mcar_fixture(std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, "mcar-fixture");
  McarFixture fx;
  fx.complete.resize(static_cast<Eigen::Index>(n), 14);
  for (Eigen::Index i = 0; i < fx.complete.rows(); ++i) {
    const double z = standard_normal(rng);
    for (Eigen::Index j = 0; j < 14; ++j) {
      fx.complete(i, j) = 10.0 + static_cast<double>(j) + 0.8 * z + 0.6 * standard_normal(rng);
    }
  }
  for (Eigen::Index i = 0; i < fx.complete.rows(); ++i) {
    PartialRow row;
    for (std::size_t j = 0; j < 14; ++j) row[j] = fx.complete(i, static_cast<Eigen::Index>(j));
    if (uniform01(rng) < 0.2) {
      row[kBmi].reset();
      fx.holes.push_back(static_cast<std::size_t>(i));
    }
    fx.partial.rows.push_back(row);
    fx.partial.labels.push_back(static_cast<double>(i % 2));
  }
  return fx;
}

inline double rmse_on_holes(const Eigen::MatrixXd& imputed, const McarFixture& fx) {
  double ss = 0.0;
  for (std::size_t i : fx.holes) {
    const auto r = static_cast<Eigen::Index>(i);
    const double d = imputed(r, kBmi) - fx.complete(r, kBmi);
    ss += d * d;
  }
  return std::sqrt(ss / static_cast<double>(fx.holes.size()));
}

}  // namespace fedprov::testing

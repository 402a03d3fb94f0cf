#include "fedprov/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedprov/log.hpp"
#include "fedprov/rng.hpp"

namespace fedprov {

namespace {

using Eigen::Index;

constexpr Index kCols = static_cast<Index>(kNumFeatures);

std::array<std::size_t, kNumFeatures> missing_counts(const PartialMatrix& m) {
  std::array<std::size_t, kNumFeatures> counts{};
  for (const auto& row : m.rows) {
    for (std::size_t f = 0; f < kNumFeatures; ++f) counts[f] += row[f] ? 0 : 1;
  }
  return counts;
}

struct ConditionalFit {
  Eigen::VectorXd coef;   // one per predictor column
  double intercept = 0.0;
  double residual_sd = 0.0;
  bool ridge = false;
};

// Least squares of y on X with an unpenalized intercept, via centering. Falls
// back to ridge on the slopes when the centered design is rank deficient.
ConditionalFit fit_conditional(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  ConditionalFit fit;
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = x.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xc);
  if (qr.rank() == xc.cols()) {
    fit.coef = qr.solve(yc);
  } else {
    fit.ridge = true;
    Eigen::MatrixXd gram = xc.transpose() * xc;
    gram.diagonal().array() += kMiceRidgeLambda;
    fit.coef = gram.ldlt().solve(xc.transpose() * yc);
  }
  fit.intercept = y_mean - x_mean.dot(fit.coef);
  const double rss = (yc - xc * fit.coef).squaredNorm();
  const auto dof = std::max<Index>(1, y.size() - xc.cols() - 1);
  fit.residual_sd = std::sqrt(rss / static_cast<double>(dof));
  return fit;
}

}  // namespace

LabeledMatrix initial_fill(const PartialMatrix& m) {
  const auto n = static_cast<Index>(m.size());
  Eigen::MatrixXd x(n, kCols);
  Eigen::VectorXd y(n);
  std::array<double, kNumFeatures> sum{};
  std::array<std::size_t, kNumFeatures> observed{};
  for (const auto& row : m.rows) {
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      if (row[f]) {
        sum[f] += *row[f];
        ++observed[f];
      }
    }
  }
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (observed[f] == 0 && n > 0) {
      throw ValidationError("column '" + std::string(kFeatureNames[f]) +
                            "' is entirely missing; nothing to impute from");
    }
  }
  for (Index i = 0; i < n; ++i) {
    const auto& row = m.rows[static_cast<std::size_t>(i)];
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
      x(i, static_cast<Index>(f)) =
          row[f] ? *row[f] : sum[f] / static_cast<double>(observed[f]);
    }
    y(i) = m.labels[static_cast<std::size_t>(i)];
  }
  return LabeledMatrix(std::move(x), std::move(y));
}

LabeledMatrix initial_fill(const Dataset& ds) { return initial_fill(to_partial_matrix(ds)); }

MiceResult mice_impute_detailed(const PartialMatrix& m, const MiceConfig& cfg) {
  if (m.size() == 0) throw ValidationError("cannot impute an empty dataset");
  if (cfg.n_iterations < 1) throw ValidationError("MICE needs at least one iteration");

  MiceResult result{initial_fill(m), {}, 0};
  const auto counts = missing_counts(m);
  if (std::find(counts.begin(), counts.end(), 0) == counts.end()) {
    throw ValidationError("MICE needs at least one fully observed column");
  }

  std::vector<std::size_t> order;
  for (std::size_t f = 0; f < kNumFeatures; ++f) {
    if (counts[f] > 0) order.push_back(f);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] < counts[b]; });

  // Row indices of observed and missing entries per incomplete column.
  std::array<std::vector<Index>, kNumFeatures> obs_rows;
  std::array<std::vector<Index>, kNumFeatures> mis_rows;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t f : order) {
      (m.rows[i][f] ? obs_rows[f] : mis_rows[f]).push_back(static_cast<Index>(i));
    }
  }

  Rng rng = make_rng(cfg.seed, "mice");
  Eigen::MatrixXd& x = result.data.x;
  for (std::size_t it = 0; it < cfg.n_iterations; ++it) {
    double change = 0.0;
    for (std::size_t c : order) {
      std::vector<Index> predictors;
      for (Index f = 0; f < kCols; ++f) {
        if (f != static_cast<Index>(c)) predictors.push_back(f);
      }
      const Eigen::MatrixXd x_obs = x(obs_rows[c], predictors);
      const Eigen::VectorXd y_obs = x(obs_rows[c], static_cast<Index>(c));
      const ConditionalFit fit = fit_conditional(x_obs, y_obs);
      if (fit.ridge) {
        ++result.ridge_fallbacks;
        log::warn("MICE: design for column '" + std::string(kFeatureNames[c]) +
                  "' is rank deficient; using ridge (lambda 1e-6)");
      }
      const Eigen::MatrixXd x_mis = x(mis_rows[c], predictors);
      Eigen::VectorXd pred = (x_mis * fit.coef).array() + fit.intercept;
      if (cfg.noise) {
        for (Index k = 0; k < pred.size(); ++k) pred(k) += fit.residual_sd * standard_normal(rng);
      }
      for (Index k = 0; k < pred.size(); ++k) {
        double& cell = x(mis_rows[c][static_cast<std::size_t>(k)], static_cast<Index>(c));
        change += (pred(k) - cell) * (pred(k) - cell);
        cell = pred(k);
      }
    }
    result.iteration_deltas.push_back(std::sqrt(change));
  }
  return result;
}

LabeledMatrix mice_impute(const Dataset& ds, const MiceConfig& cfg) {
  return mice_impute_detailed(to_partial_matrix(ds), cfg).data;
}

}  // namespace fedprov

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fedprov/rng.hpp"
#include "fedprov/schema.hpp"

namespace fedprov {

enum class ModelFamily { kLogistic, kMlp };

std::string_view to_string(ModelFamily family);
/// Accepts "lr"/"logistic" and "mlp".
ModelFamily parse_family(std::string_view name);

struct TensorShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const TensorShape&) const = default;
};

/// Ordered tensor shapes of a flattened model. Each tensor is stored row-major.
///   logistic: weights (1 x 14), intercept (1 x 1)
///   mlp:      W1 (h1 x 14), b1 (h1 x 1), W2 (h2 x h1), b2 (h2 x 1),
///             W3 (1 x h2), b3 (1 x 1)
struct ParamLayout {
  ModelFamily family = ModelFamily::kLogistic;
  std::vector<TensorShape> tensors;

  std::size_t size() const;
  bool operator==(const ParamLayout&) const = default;
};

ParamLayout logistic_layout();
ParamLayout mlp_layout(std::size_t hidden1 = 128, std::size_t hidden2 = 128);

/// The unit exchanged and averaged by federated training.
struct ParamVector {
  ParamLayout layout;
  Eigen::VectorXd values;
};

/// Throws ValidationError if `values` does not match `layout`.
void check_consistent(const ParamVector& p);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LogisticModel {
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kNumFeatures));
  double intercept = 0.0;
};

struct MlpModel {
  RowMatrix w1;
  Eigen::VectorXd b1;
  RowMatrix w2;
  Eigen::VectorXd b2;
  RowMatrix w3;  // 1 x h2
  double b3 = 0.0;

  /// All-zero network with the given hidden sizes.
  static MlpModel zeros(std::size_t hidden1 = 128, std::size_t hidden2 = 128);
};

ParamVector flatten(const LogisticModel& m);
ParamVector flatten(const MlpModel& m);
/// Throws ValidationError on a layout that does not belong to the family.
LogisticModel unflatten_logistic(const ParamVector& p);
MlpModel unflatten_mlp(const ParamVector& p);

struct TrainConfig {
  double learning_rate = 0.001;
  double l2_alpha = 0.01;  // mlp only
  double l1_c = 1.0;       // logistic only
  std::size_t batch_size = 200;
  /// Matched to the expected local passes per client under FedAvg defaults
  /// (T * n / K = 100 * 2 / 7, about 29).
  std::size_t epochs = 30;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Stop once the epoch-mean loss has failed to improve on its best value by
  /// `tolerance` for `patience` consecutive epochs.
  bool early_stop = true;
  double tolerance = 1e-4;
  std::size_t patience = 10;
  std::array<std::size_t, 2> hidden = {128, 128};
  std::uint64_t seed = 0;
};

/// Defaults for each family. The logistic learning rate is not a toolkit
/// default; 0.05 converges well on standardized features.
TrainConfig default_train_config(ModelFamily family);

void validate(const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Logistic regression

double sigmoid(double z);

/// sigmoid(w . x + b). Throws ValidationError on non-finite input.
double lr_predict(const LogisticModel& m, std::span<const double> x);

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Mean binary cross-entropy and its gradient; the L1 penalty is not included.
LossAndGrad lr_loss_and_grad(const LogisticModel& m, const LabeledMatrix& batch);

/// Soft-thresholds every weight; the intercept (last entry) is left alone.
ParamVector prox_l1(const ParamVector& p, double threshold);

// ---------------------------------------------------------------------------
// MLP

struct MlpCache {
  Eigen::VectorXd z1, h1, z2, h2;
  double z3 = 0.0;
};

struct MlpOutput {
  double probability = 0.5;
  MlpCache cache;
};

MlpOutput mlp_forward(const MlpModel& m, std::span<const double> x);

/// Mean BCE plus alpha / (2 * batch size) * sum of squared weights (biases
/// excluded), with the gradient by backpropagation.
LossAndGrad mlp_loss_and_grad(const MlpModel& m, const LabeledMatrix& batch, double l2_alpha);

/// Glorot-uniform weights, zero biases.
MlpModel mlp_init(std::size_t hidden1, std::size_t hidden2, Rng& rng);

// ---------------------------------------------------------------------------
// Optimization

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::uint64_t t = 0;
};

struct AdamHyper {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One bias-corrected Adam update of `params` in place. An empty state is
/// sized on first use.
void adam_step(AdamState& state, const Eigen::VectorXd& grad, Eigen::VectorXd& params,
               const AdamHyper& hyper);

/// Per-trainer mutable state: the shuffling stream and, for the MLP, Adam moments.
struct OptimizerState {
  Rng rng;
  AdamState adam;
  std::uint64_t steps = 0;
};

/// Shuffling stream used by a trainer with the given seed and client slot.
/// Centralized training uses slot 0.
OptimizerState make_optimizer_state(std::uint64_t seed, std::uint64_t slot = 0);

/// Family initializer: zeros for logistic, Glorot for the MLP (seeded).
ParamVector initial_params(ModelFamily family, const TrainConfig& cfg);

struct EpochReport {
  std::size_t epochs_run = 0;
  std::vector<double> epoch_losses;
};

/// Runs up to `epochs` passes of seeded-shuffled mini-batches over `data`,
/// updating `params` and `state` in place. Logistic: gradient step on the
/// smooth loss, then prox_l1 with threshold lr / (C * n). MLP: Adam.
/// This is the single update rule behind centralized, local and federated
/// training.
EpochReport train_epochs(ParamVector& params, const LabeledMatrix& data, const TrainConfig& cfg,
                         OptimizerState& state, std::size_t epochs, bool allow_early_stop);

/// Throws ValidationError unless both classes are present.
void require_both_classes(const LabeledMatrix& data);

LogisticModel train_logistic(const LabeledMatrix& data, const TrainConfig& cfg);
MlpModel train_mlp(const LabeledMatrix& data, const TrainConfig& cfg);

/// Probability for each row of `x` (already standardized).
std::vector<double> predict(const ParamVector& params, const Eigen::MatrixXd& x);

}  // namespace fedprov

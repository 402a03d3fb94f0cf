#include "fedprov/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fedprov {

using Eigen::Index;
using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr Index kInputs = static_cast<Index>(kNumFeatures);

std::string_view to_string(ModelFamily family) {
  return family == ModelFamily::kLogistic ? "lr" : "mlp";
}

ModelFamily parse_family(std::string_view name) {
  if (name == "lr" || name == "logistic") return ModelFamily::kLogistic;
  if (name == "mlp") return ModelFamily::kMlp;
  throw ValidationError("unknown model family '" + std::string(name) + "' (expected lr or mlp)");
}

std::size_t ParamLayout::size() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

ParamLayout logistic_layout() {
  return ParamLayout{ModelFamily::kLogistic, {{1, kNumFeatures}, {1, 1}}};
}

ParamLayout mlp_layout(std::size_t hidden1, std::size_t hidden2) {
  return ParamLayout{ModelFamily::kMlp,
                     {{hidden1, kNumFeatures}, {hidden1, 1}, {hidden2, hidden1}, {hidden2, 1},
                      {1, hidden2}, {1, 1}}};
}

void check_consistent(const ParamVector& p) {
  if (static_cast<std::size_t>(p.values.size()) != p.layout.size()) {
    throw ValidationError("parameter vector has " + std::to_string(p.values.size()) +
                          " values but its layout needs " + std::to_string(p.layout.size()));
  }
}

namespace {

bool is_logistic_layout(const ParamLayout& l) { return l == logistic_layout(); }

bool is_mlp_layout(const ParamLayout& l) {
  return l.family == ModelFamily::kMlp && l.tensors.size() == 6 &&
         l == mlp_layout(l.tensors[0].rows, l.tensors[2].rows);
}

// Read-only views of a flat MLP parameter vector.
struct MlpView {
  Map<const RowMatrix> w1;
  Map<const VectorXd> b1;
  Map<const RowMatrix> w2;
  Map<const VectorXd> b2;
  Map<const RowMatrix> w3;
  double b3;

  MlpView(const VectorXd& p, Index h1, Index h2)
      : w1(p.data(), h1, kInputs),
        b1(p.data() + h1 * kInputs, h1),
        w2(p.data() + h1 * kInputs + h1, h2, h1),
        b2(p.data() + h1 * kInputs + h1 + h2 * h1, h2),
        w3(p.data() + h1 * kInputs + h1 + h2 * h1 + h2, 1, h2),
        b3(p(p.size() - 1)) {}
};

struct MlpGradView {
  Map<RowMatrix> w1;
  Map<VectorXd> b1;
  Map<RowMatrix> w2;
  Map<VectorXd> b2;
  Map<RowMatrix> w3;
  double& b3;

  MlpGradView(VectorXd& g, Index h1, Index h2)
      : w1(g.data(), h1, kInputs),
        b1(g.data() + h1 * kInputs, h1),
        w2(g.data() + h1 * kInputs + h1, h2, h1),
        b2(g.data() + h1 * kInputs + h1 + h2 * h1, h2),
        w3(g.data() + h1 * kInputs + h1 + h2 * h1 + h2, 1, h2),
        b3(g(g.size() - 1)) {}
};

std::pair<Index, Index> hidden_sizes(const ParamLayout& l) {
  return {static_cast<Index>(l.tensors[0].rows), static_cast<Index>(l.tensors[2].rows)};
}

// Binary cross-entropy from a logit, stable for any magnitude.
double bce_from_logit(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

double logistic_batch(const VectorXd& params, const MatrixXd& xb, const VectorXd& yb,
                      VectorXd& grad) {
  const auto w = params.head(kInputs);
  const double b = params(kInputs);
  const VectorXd z = (xb * w).array() + b;
  const auto n = static_cast<double>(yb.size());
  double loss = 0.0;
  VectorXd resid(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    loss += bce_from_logit(z(i), yb(i));
    resid(i) = sigmoid(z(i)) - yb(i);
  }
  grad.resize(params.size());
  grad.head(kInputs) = xb.transpose() * resid / n;
  grad(kInputs) = resid.sum() / n;
  return loss / n;
}

double mlp_batch(const VectorXd& params, Index h1, Index h2, const MatrixXd& xb,
                 const VectorXd& yb, double alpha, VectorXd& grad) {
  const MlpView m(params, h1, h2);
  const auto n = static_cast<double>(yb.size());

  const MatrixXd z1 = (xb * m.w1.transpose()).rowwise() + m.b1.transpose();
  const MatrixXd a1 = z1.cwiseMax(0.0);
  const MatrixXd z2 = (a1 * m.w2.transpose()).rowwise() + m.b2.transpose();
  const MatrixXd a2 = z2.cwiseMax(0.0);
  const VectorXd z3 = (a2 * m.w3.transpose()).array() + m.b3;

  double loss = 0.0;
  VectorXd d3(z3.size());
  for (Index i = 0; i < z3.size(); ++i) {
    loss += bce_from_logit(z3(i), yb(i));
    d3(i) = (sigmoid(z3(i)) - yb(i)) / n;
  }
  loss /= n;
  loss += alpha / (2.0 * n) *
          (m.w1.squaredNorm() + m.w2.squaredNorm() + m.w3.squaredNorm());

  grad.resize(params.size());
  MlpGradView g(grad, h1, h2);
  const double decay = alpha / n;
  g.w3 = d3.transpose() * a2 + decay * m.w3;
  g.b3 = d3.sum();
  const MatrixXd dz2 = (d3 * m.w3).cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
  g.w2 = dz2.transpose() * a1 + decay * m.w2;
  g.b2 = dz2.colwise().sum().transpose();
  const MatrixXd dz1 = (dz2 * m.w2).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
  g.w1 = dz1.transpose() * xb + decay * m.w1;
  g.b1 = dz1.colwise().sum().transpose();
  return loss;
}

void require_finite(std::span<const double> x) {
  if (x.size() != kNumFeatures) throw ValidationError("expected a 14-value feature vector");
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("non-finite model input");
  }
}

}  // namespace

MlpModel MlpModel::zeros(std::size_t hidden1, std::size_t hidden2) {
  const auto h1 = static_cast<Index>(hidden1);
  const auto h2 = static_cast<Index>(hidden2);
  return MlpModel{RowMatrix::Zero(h1, kInputs), VectorXd::Zero(h1), RowMatrix::Zero(h2, h1),
                  VectorXd::Zero(h2), RowMatrix::Zero(1, h2), 0.0};
}

ParamVector flatten(const LogisticModel& m) {
  if (m.weights.size() != kInputs) throw ValidationError("logistic model needs 14 weights");
  ParamVector p{logistic_layout(), VectorXd(kInputs + 1)};
  p.values.head(kInputs) = m.weights;
  p.values(kInputs) = m.intercept;
  return p;
}

ParamVector flatten(const MlpModel& m) {
  const Index h1 = m.w1.rows();
  const Index h2 = m.w2.rows();
  if (m.w1.cols() != kInputs || m.b1.size() != h1 || m.w2.cols() != h1 || m.b2.size() != h2 ||
      m.w3.rows() != 1 || m.w3.cols() != h2) {
    throw ValidationError("MLP tensors have inconsistent shapes");
  }
  ParamVector p{mlp_layout(static_cast<std::size_t>(h1), static_cast<std::size_t>(h2)), {}};
  p.values.resize(static_cast<Index>(p.layout.size()));
  MlpGradView out(p.values, h1, h2);
  out.w1 = m.w1;
  out.b1 = m.b1;
  out.w2 = m.w2;
  out.b2 = m.b2;
  out.w3 = m.w3;
  out.b3 = m.b3;
  return p;
}

LogisticModel unflatten_logistic(const ParamVector& p) {
  if (!is_logistic_layout(p.layout)) throw ValidationError("layout is not a logistic layout");
  check_consistent(p);
  return LogisticModel{p.values.head(kInputs), p.values(kInputs)};
}

MlpModel unflatten_mlp(const ParamVector& p) {
  if (!is_mlp_layout(p.layout)) throw ValidationError("layout is not an MLP layout");
  check_consistent(p);
  const auto [h1, h2] = hidden_sizes(p.layout);
  const MlpView v(p.values, h1, h2);
  return MlpModel{v.w1, v.b1, v.w2, v.b2, v.w3, v.b3};
}

TrainConfig default_train_config(ModelFamily family) {
  TrainConfig cfg;
  if (family == ModelFamily::kLogistic) cfg.learning_rate = 0.05;
  return cfg;
}

void validate(const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (cfg.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (cfg.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(cfg.l1_c > 0.0)) throw ValidationError("C must be > 0");
  if (!(cfg.l2_alpha >= 0.0)) throw ValidationError("alpha must be >= 0");
  if (cfg.hidden[0] < 1 || cfg.hidden[1] < 1) throw ValidationError("hidden sizes must be >= 1");
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double lr_predict(const LogisticModel& m, std::span<const double> x) {
  require_finite(x);
  const Map<const VectorXd> xv(x.data(), kInputs);
  return sigmoid(m.weights.dot(xv) + m.intercept);
}

LossAndGrad lr_loss_and_grad(const LogisticModel& m, const LabeledMatrix& batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  LossAndGrad out{0.0, flatten(m)};
  const VectorXd params = out.grad.values;
  out.loss = logistic_batch(params, batch.x, batch.y, out.grad.values);
  return out;
}

ParamVector prox_l1(const ParamVector& p, double threshold) {
  if (!(threshold >= 0.0)) throw ValidationError("prox threshold must be >= 0");
  check_consistent(p);
  ParamVector out = p;
  // Every entry but the last (the intercept) is a weight.
  for (Index i = 0; i + 1 < out.values.size(); ++i) {
    const double w = out.values(i);
    out.values(i) = std::copysign(std::max(std::abs(w) - threshold, 0.0), w);
    if (out.values(i) == 0.0) out.values(i) = 0.0;  // no negative zeros
  }
  return out;
}

MlpOutput mlp_forward(const MlpModel& m, std::span<const double> x) {
  require_finite(x);
  const Map<const VectorXd> xv(x.data(), kInputs);
  MlpOutput out;
  out.cache.z1 = m.w1 * xv + m.b1;
  out.cache.h1 = out.cache.z1.cwiseMax(0.0);
  out.cache.z2 = m.w2 * out.cache.h1 + m.b2;
  out.cache.h2 = out.cache.z2.cwiseMax(0.0);
  out.cache.z3 = m.w3.row(0).dot(out.cache.h2) + m.b3;
  out.probability = sigmoid(out.cache.z3);
  return out;
}

LossAndGrad mlp_loss_and_grad(const MlpModel& m, const LabeledMatrix& batch, double l2_alpha) {
  if (batch.empty()) throw ValidationError("empty batch");
  LossAndGrad out{0.0, flatten(m)};
  const VectorXd params = out.grad.values;
  const auto [h1, h2] = hidden_sizes(out.grad.layout);
  out.loss = mlp_batch(params, h1, h2, batch.x, batch.y, l2_alpha, out.grad.values);
  return out;
}

MlpModel mlp_init(std::size_t hidden1, std::size_t hidden2, Rng& rng) {
  MlpModel m = MlpModel::zeros(hidden1, hidden2);
  auto glorot = [&rng](RowMatrix& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < w.cols(); ++j) w(i, j) = limit * (2.0 * uniform01(rng) - 1.0);
    }
  };
  glorot(m.w1);
  glorot(m.w2);
  glorot(m.w3);
  return m;
}

void adam_step(AdamState& state, const VectorXd& grad, VectorXd& params, const AdamHyper& h) {
  if (grad.size() != params.size()) throw ValidationError("Adam: gradient/parameter size mismatch");
  if (state.t == 0 && state.m.size() == 0) {
    state.m = VectorXd::Zero(params.size());
    state.v = VectorXd::Zero(params.size());
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ValidationError("Adam: state size does not match parameters");
  }
  ++state.t;
  const auto t = static_cast<double>(state.t);
  state.m = h.beta1 * state.m + (1.0 - h.beta1) * grad;
  state.v = h.beta2 * state.v + (1.0 - h.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  params.array() -=
      h.learning_rate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + h.epsilon);
}

OptimizerState make_optimizer_state(std::uint64_t seed, std::uint64_t slot) {
  return OptimizerState{make_rng(seed, "trainer", slot), {}, 0};
}

ParamVector initial_params(ModelFamily family, const TrainConfig& cfg) {
  if (family == ModelFamily::kLogistic) return flatten(LogisticModel{});
  Rng rng = make_rng(cfg.seed, "init");
  return flatten(mlp_init(cfg.hidden[0], cfg.hidden[1], rng));
}

void require_both_classes(const LabeledMatrix& data) {
  const std::size_t pos = data.positives();
  if (pos == 0 || pos == data.size()) {
    throw ValidationError("training data must contain both classes");
  }
}

EpochReport train_epochs(ParamVector& params, const LabeledMatrix& data, const TrainConfig& cfg,
                         OptimizerState& state, std::size_t epochs, bool allow_early_stop) {
  // A zero learning rate is allowed here (a null federated step); the public
  // trainers reject it through validate().
  TrainConfig checked = cfg;
  if (checked.learning_rate == 0.0) checked.learning_rate = 1.0;
  validate(checked);
  check_consistent(params);
  if (data.empty()) throw ValidationError("cannot train on an empty dataset");
  const bool logistic = params.layout.family == ModelFamily::kLogistic;
  if (logistic ? !is_logistic_layout(params.layout) : !is_mlp_layout(params.layout)) {
    throw ValidationError("parameter layout does not match its family");
  }

  const std::size_t n = data.size();
  const std::size_t batch = std::min(cfg.batch_size, n);
  const double prox_threshold = cfg.learning_rate / (cfg.l1_c * static_cast<double>(n));
  const AdamHyper hyper{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon};
  Index h1 = 0;
  Index h2 = 0;
  if (!logistic) std::tie(h1, h2) = hidden_sizes(params.layout);

  EpochReport report;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  VectorXd grad;
  MatrixXd xb;
  VectorXd yb;
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto order = shuffled_indices(n, state.rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      const std::vector<Index> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(stop));
      xb = data.x(idx, Eigen::all);
      yb = data.y(idx);
      double loss;
      if (logistic) {
        loss = logistic_batch(params.values, xb, yb, grad);
        params.values -= cfg.learning_rate * grad;
        for (Index i = 0; i < kInputs; ++i) {
          const double w = params.values(i);
          const double shrunk = std::max(std::abs(w) - prox_threshold, 0.0);
          params.values(i) = shrunk == 0.0 ? 0.0 : std::copysign(shrunk, w);
        }
      } else {
        loss = mlp_batch(params.values, h1, h2, xb, yb, cfg.l2_alpha, grad);
        adam_step(state.adam, grad, params.values, hyper);
      }
      loss_sum += loss * static_cast<double>(stop - start);
      ++state.steps;
    }
    double epoch_loss = loss_sum / static_cast<double>(n);
    if (logistic) {
      epoch_loss += params.values.head(kInputs).lpNorm<1>() / (cfg.l1_c * static_cast<double>(n));
    }
    report.epoch_losses.push_back(epoch_loss);
    ++report.epochs_run;
    if (allow_early_stop) {
      stale = epoch_loss > best - cfg.tolerance ? stale + 1 : 0;
      best = std::min(best, epoch_loss);
      if (stale >= cfg.patience) break;
    }
  }
  return report;
}

LogisticModel train_logistic(const LabeledMatrix& data, const TrainConfig& cfg) {
  validate(cfg);
  require_both_classes(data);
  ParamVector params = initial_params(ModelFamily::kLogistic, cfg);
  OptimizerState state = make_optimizer_state(cfg.seed);
  train_epochs(params, data, cfg, state, cfg.epochs, cfg.early_stop);
  return unflatten_logistic(params);
}

MlpModel train_mlp(const LabeledMatrix& data, const TrainConfig& cfg) {
  validate(cfg);
  require_both_classes(data);
  ParamVector params = initial_params(ModelFamily::kMlp, cfg);
  OptimizerState state = make_optimizer_state(cfg.seed);
  train_epochs(params, data, cfg, state, cfg.epochs, cfg.early_stop);
  return unflatten_mlp(params);
}

std::vector<double> predict(const ParamVector& params, const MatrixXd& x) {
  check_consistent(params);
  VectorXd z;
  if (params.layout.family == ModelFamily::kLogistic) {
    if (!is_logistic_layout(params.layout)) throw ValidationError("bad logistic layout");
    z = (x * params.values.head(kInputs)).array() + params.values(kInputs);
  } else {
    if (!is_mlp_layout(params.layout)) throw ValidationError("bad MLP layout");
    const auto [h1, h2] = hidden_sizes(params.layout);
    const MlpView m(params.values, h1, h2);
    const MatrixXd a1 = ((x * m.w1.transpose()).rowwise() + m.b1.transpose()).cwiseMax(0.0);
    const MatrixXd a2 = ((a1 * m.w2.transpose()).rowwise() + m.b2.transpose()).cwiseMax(0.0);
    z = (a2 * m.w3.transpose()).array() + m.b3;
  }
  std::vector<double> out(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) out[static_cast<std::size_t>(i)] = sigmoid(z(i));
  return out;
}

}  // namespace fedprov

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fedprov/models.hpp"
#include "fedprov/rng.hpp"
#include "fedprov/schema.hpp"

namespace fedprov {

struct FedConfig {
  std::size_t participants = 2;  // n
  std::size_t rounds = 100;      // T
  std::size_t local_epochs = 1;  // E
  /// Local step rule: batch size, learning rate, penalties, hidden sizes.
  TrainConfig train;
  std::uint64_t seed = 0;
  /// Evaluate the global model every this many rounds (0 = never).
  std::size_t eval_interval = 0;
  /// Stop early once the evaluated metric improves by less than
  /// plateau_delta over plateau_window rounds. Needs an evaluator.
  bool plateau_stop = false;
  double plateau_delta = 1e-3;
  std::size_t plateau_window = 20;
  /// Run the selected clients' updates on separate threads.
  bool parallel = false;
};

/// Throws ValidationError unless 1 <= n <= K, T >= 1 and E >= 1.
void validate(const FedConfig& cfg, std::size_t total_clients);

/// One province. Holds its standardized training matrix, its standardizer and
/// its optimizer state privately; only client_update and client-side scoring
/// touch the matrix.
class Client {
 public:
  /// `train` must already be imputed and standardized with `standardizer`.
  /// The shuffling stream is slot `slot` of `fed_seed`.
  Client(Province province, LabeledMatrix train, Standardizer standardizer,
         std::uint64_t fed_seed, std::uint64_t slot);

  Province province() const { return province_; }
  std::size_t num_samples() const { return data_.size(); }
  const Standardizer& standardizer() const { return standardizer_; }
  std::uint64_t optimizer_steps() const { return state_.steps; }
  const AdamState& adam_state() const { return state_.adam; }

  /// Client-side inference: standardizes raw (imputed) features with this
  /// client's standardizer and scores them with `params`.
  std::vector<double> score(const ParamVector& params, const Eigen::MatrixXd& raw_features) const;

 private:
  friend std::optional<ParamVector> client_update(const ParamVector& global, Client& client,
                                                  const FedConfig& cfg);

  Province province_;
  LabeledMatrix data_;
  Standardizer standardizer_;
  OptimizerState state_;
};

/// Uniform n-subset of {0..K-1} without replacement, returned ascending.
std::vector<std::size_t> select_participants(std::size_t total, std::size_t n, Rng& rng);

/// E local epochs starting from `global`, using the family's step rule and the
/// client's persistent optimizer state. Returns nullopt (with a warning) for a
/// client without data.
std::optional<ParamVector> client_update(const ParamVector& global, Client& client,
                                         const FedConfig& cfg);

/// Elementwise arithmetic mean, summed in list order.
ParamVector aggregate(const std::vector<ParamVector>& updates);

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  std::vector<std::size_t> selected;
  std::uint64_t checksum = 0;
  std::optional<double> metric;
};

using RoundHistory = std::vector<RoundRecord>;

/// FNV-1a over the little-endian bytes of the values.
std::uint64_t checksum(const ParamVector& p);

struct FedResult {
  ParamVector params;
  RoundHistory history;
};

/// Scores a broadcast model, higher is better (e.g. global-test AUC).
using GlobalEvaluator = std::function<double(const ParamVector&)>;

/// Server loop: initialize w0 with the family initializer (seeded by cfg.seed),
/// then for each round select participants, collect their updates, average
/// them and broadcast. Only ParamVectors cross the client boundary.
FedResult run_fedavg(std::vector<Client>& clients, ModelFamily family, const FedConfig& cfg,
                     const GlobalEvaluator& evaluator = {});

}  // namespace fedprov

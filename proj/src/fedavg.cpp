#include "fedprov/fedavg.hpp"

#include <algorithm>
#include <bit>
#include <future>
#include <numeric>

#include "fedprov/log.hpp"

namespace fedprov {

void validate(const FedConfig& cfg, std::size_t total_clients) {
  if (total_clients == 0) throw ValidationError("federated run needs at least one client");
  if (cfg.participants < 1 || cfg.participants > total_clients) {
    throw ValidationError("participants per round must lie in [1, " +
                          std::to_string(total_clients) + "]");
  }
  if (cfg.rounds < 1) throw ValidationError("rounds must be >= 1");
  if (cfg.local_epochs < 1) throw ValidationError("local epochs must be >= 1");
  if (cfg.train.learning_rate < 0.0) throw ValidationError("learning rate must be >= 0");
  if (cfg.plateau_stop && cfg.plateau_window < 1) {
    throw ValidationError("plateau window must be >= 1");
  }
}

Client::Client(Province province, LabeledMatrix train, Standardizer standardizer,
               std::uint64_t fed_seed, std::uint64_t slot)
    : province_(province),
      data_(std::move(train)),
      standardizer_(std::move(standardizer)),
      state_(make_optimizer_state(fed_seed, slot)) {}

std::vector<double> Client::score(const ParamVector& params,
                                  const Eigen::MatrixXd& raw_features) const {
  return predict(params, standardize_apply(standardizer_, raw_features));
}

std::vector<std::size_t> select_participants(std::size_t total, std::size_t n, Rng& rng) {
  if (n < 1 || n > total) {
    throw ValidationError("cannot select " + std::to_string(n) + " of " +
                          std::to_string(total) + " clients");
  }
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first n slots end up a uniform n-subset.
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, total - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::optional<ParamVector> client_update(const ParamVector& global, Client& client,
                                         const FedConfig& cfg) {
  if (client.data_.empty()) {
    log::warn("client " + std::string(to_string(client.province_)) +
              " has no training data; skipped this round");
    return std::nullopt;
  }
  ParamVector local = global;
  train_epochs(local, client.data_, cfg.train, client.state_, cfg.local_epochs, false);
  return local;
}

ParamVector aggregate(const std::vector<ParamVector>& updates) {
  if (updates.empty()) throw ValidationError("nothing to aggregate");
  ParamVector out = updates.front();
  check_consistent(out);
  for (std::size_t k = 1; k < updates.size(); ++k) {
    if (!(updates[k].layout == out.layout)) {
      throw ValidationError("cannot aggregate parameter vectors with different layouts");
    }
    check_consistent(updates[k]);
    out.values += updates[k].values;
  }
  if (updates.size() > 1) out.values /= static_cast<double>(updates.size());
  return out;
}

std::uint64_t checksum(const ParamVector& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Eigen::Index i = 0; i < p.values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(p.values(i));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

FedResult run_fedavg(std::vector<Client>& clients, ModelFamily family, const FedConfig& cfg,
                     const GlobalEvaluator& evaluator) {
  validate(cfg, clients.size());
  if (cfg.plateau_stop && !evaluator) {
    throw ValidationError("plateau stopping needs a global evaluator");
  }
  if (std::all_of(clients.begin(), clients.end(),
                  [](const Client& c) { return c.num_samples() == 0; })) {
    throw ValidationError("every client is empty");
  }
  TrainConfig init_cfg = cfg.train;
  init_cfg.seed = cfg.seed;
  FedResult result{initial_params(family, init_cfg), {}};
  Rng server = make_rng(cfg.seed, "server");

  std::optional<double> best_metric;
  std::size_t best_round = 0;
  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    RoundRecord record;
    record.round = t;
    record.selected = select_participants(clients.size(), cfg.participants, server);

    std::vector<std::optional<ParamVector>> updates(record.selected.size());
    if (cfg.parallel && record.selected.size() > 1) {
      std::vector<std::future<std::optional<ParamVector>>> jobs;
      for (std::size_t k : record.selected) {
        jobs.push_back(std::async(std::launch::async, [&, k] {
          return client_update(result.params, clients[k], cfg);
        }));
      }
      for (std::size_t i = 0; i < jobs.size(); ++i) updates[i] = jobs[i].get();
    } else {
      for (std::size_t i = 0; i < record.selected.size(); ++i) {
        updates[i] = client_update(result.params, clients[record.selected[i]], cfg);
      }
    }

    std::vector<ParamVector> returned;
    for (auto& u : updates) {
      if (u) returned.push_back(std::move(*u));
    }
    // Broadcast: every client starts the next round from the same vector.
    if (!returned.empty()) result.params = aggregate(returned);
    record.checksum = checksum(result.params);

    if (evaluator && cfg.eval_interval > 0 && t % cfg.eval_interval == 0) {
      record.metric = evaluator(result.params);
      if (!best_metric || *record.metric >= *best_metric + cfg.plateau_delta) {
        best_metric = record.metric;
        best_round = t;
      }
    }
    result.history.push_back(std::move(record));
    if (cfg.plateau_stop && best_metric && t - best_round >= cfg.plateau_window) {
      log::info("federated training plateaued at round " + std::to_string(t));
      break;
    }
  }
  return result;
}

}  // namespace fedprov

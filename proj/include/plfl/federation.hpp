#pragma once

// Federated training loops: classical FL (every parameter is exchanged) and
// PL-FL (only shared groups are exchanged; personalized groups stay on the
// client). All traffic goes through a counting channel that records the
// element and byte count of every transfer.

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "plfl/client_opt.hpp"
#include "plfl/data.hpp"
#include "plfl/metrics.hpp"
#include "plfl/model.hpp"
#include "plfl/partition.hpp"
#include "plfl/server_opt.hpp"

namespace plfl {

enum class Direction { down, up };

inline std::string to_string(Direction d) { return d == Direction::down ? "down" : "up"; }

struct LedgerEntry {
  std::size_t round = 0;
  std::size_t client = 0;
  Direction direction = Direction::down;
  std::size_t elements = 0;
  std::size_t bytes = 0;

  bool operator==(const LedgerEntry&) const = default;
};

/// Per (round, client, direction) transfer log.
class CommLedger {
 public:
  explicit CommLedger(std::size_t wire_bytes = 4) : wire_bytes_(wire_bytes) {
    if (wire_bytes == 0) throw std::invalid_argument("wire element width must be >= 1 byte");
  }

  /// Logs the transfer and hands the payload through unchanged.
  const ParamVector& communicate(const ParamVector& payload, std::size_t round, std::size_t client,
                                 Direction dir) {
    std::lock_guard lock(mutex_);
    entries_.push_back({round, client, dir, payload.size(), payload.size() * wire_bytes_});
    return payload;
  }

  std::size_t wire_bytes() const { return wire_bytes_; }
  const std::vector<LedgerEntry>& entries() const { return entries_; }

  std::size_t total_bytes() const {
    std::size_t t = 0;
    for (const auto& e : entries_) t += e.bytes;
    return t;
  }
  std::size_t total_elements() const {
    std::size_t t = 0;
    for (const auto& e : entries_) t += e.elements;
    return t;
  }

  std::vector<LedgerEntry> round_slice(std::size_t round) const {
    std::vector<LedgerEntry> out;
    for (const auto& e : entries_) {
      if (e.round == round) out.push_back(e);
    }
    return out;
  }

  /// Puts entries in (round, client, direction) order so logs written by
  /// parallel clients compare equal to serial ones.
  void canonicalize() {
    std::lock_guard lock(mutex_);
    std::stable_sort(entries_.begin(), entries_.end(), [](const LedgerEntry& a, const LedgerEntry& b) {
      if (a.round != b.round) return a.round < b.round;
      if (a.client != b.client) return a.client < b.client;
      return a.direction < b.direction;
    });
  }

  CommLedger(const CommLedger& o) : wire_bytes_(o.wire_bytes_), entries_(o.entries_) {}
  CommLedger& operator=(const CommLedger& o) {
    wire_bytes_ = o.wire_bytes_;
    entries_ = o.entries_;
    return *this;
  }
  bool operator==(const CommLedger& o) const { return wire_bytes_ == o.wire_bytes_ && entries_ == o.entries_; }

 private:
  std::size_t wire_bytes_;
  std::vector<LedgerEntry> entries_;
  mutable std::mutex mutex_;
};

struct FederationConfig {
  std::size_t rounds = 10;
  SchemeKind scheme = SchemeKind::p2;
  ClientOptKind client_opt = ClientOptKind::adam;
  ClientHyper client;
  ServerOptKind server_opt = ServerOptKind::fedavg;
  ServerHyper server;
  std::uint64_t seed = 0;
  std::size_t wire_bytes = 4;
  std::size_t parallel = 1;
  bool evaluate_validation = true;

  void validate() const {
    if (rounds < 1) throw std::invalid_argument("rounds (T_s) must be >= 1");
    if (parallel < 1) throw std::invalid_argument("parallel must be >= 1");
    if (wire_bytes < 1) throw std::invalid_argument("wire_bytes must be >= 1");
    client.validate();
    server.validate();
  }
  bool operator==(const FederationConfig&) const = default;
};

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  std::vector<double> train_loss;
  std::vector<double> val_mase;  // empty when validation is disabled
  std::vector<LedgerEntry> ledger;
};

struct FederationResult {
  ParamVector server_shared;               // the server's aggregated groups
  std::vector<ParamVector> client_models;  // full per-client models used for inference
  std::vector<ClientState> client_states;
  std::vector<RoundRecord> rounds;
  CommLedger ledger;
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// (lowest index) is rethrown after all workers join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    const std::size_t w = std::min(workers, n);
    for (std::size_t t = 0; t < w; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += w) run(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Minibatch stream seed for client c in round t.
inline std::uint64_t client_round_seed(std::uint64_t seed, std::size_t client, std::size_t round) {
  return derive_seed(seed, 0xc11e47ULL + client, round);
}

/// Forecasts every window of `data` with `params`, in original load units.
inline ForecastSeries forecast_split(const LstmForecaster& model, const ParamVector& params,
                                     const WindowedDataset& data) {
  if (data.empty()) throw std::invalid_argument("cannot evaluate an empty split");
  ForecastSeries fs;
  fs.lag = data.lookahead();
  fs.forecasts.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    fs.forecasts.push_back(data.stats().denormalize_load(model.predict(params, data.input(i))));
  }
  fs.actuals = data.scored_actuals();
  return fs;
}

/// Per-client MASE of each client's own model on its own split.
inline std::vector<double> evaluate_round(const LstmForecaster& model, std::span<const ParamVector> params,
                                          std::span<const WindowedDataset* const> splits,
                                          std::size_t workers = 1) {
  if (params.size() != splits.size()) throw std::invalid_argument("evaluate_round: client count mismatch");
  std::vector<double> out(params.size());
  parallel_for(params.size(), workers, [&](std::size_t c) {
    out[c] = mase(forecast_split(model, params[c], *splits[c]));
  });
  return out;
}

namespace detail {

inline void require_clients(const FederationConfig& cfg, std::span<const DatasetSplits> data) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("federation needs at least one client dataset");
}

inline std::string context(std::size_t round, std::size_t client) {
  return "round " + std::to_string(round) + ", client " + std::to_string(client) + ": ";
}

inline FederationResult run_partitioned(const FederationConfig& cfg, const LstmForecaster& model,
                                        const PartitionScheme& scheme, const ParamVector& init,
                                        std::span<const DatasetSplits> data) {
  require_clients(cfg, data);
  scheme.validate(init);
  const std::size_t n = data.size();
  const auto penalty = proximal_penalty_mask(scheme);

  auto [init_shared, init_personal] = split(init, scheme);
  ServerState server = make_server_state(cfg.server_opt, init_shared, n);
  std::vector<ClientState> clients(n, make_client_state(cfg.client_opt, init));

  FederationResult result{ParamVector{}, {}, {}, {}, CommLedger(cfg.wire_bytes)};
  std::vector<double> sample_counts(n);
  std::vector<const WindowedDataset*> val_splits(n);
  for (std::size_t c = 0; c < n; ++c) {
    sample_counts[c] = static_cast<double>(data[c].train.size());
    val_splits[c] = &data[c].val;
  }

  auto client_model = [&](std::size_t c) {
    return merge(server.broadcast_for(c), split(clients[c].theta, scheme).personalized, scheme);
  };

  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    std::vector<ParamVector> uploads(n);
    std::vector<double> losses(n);
    parallel_for(n, cfg.parallel, [&](std::size_t c) {
      try {
        const ParamVector& received = result.ledger.communicate(server.broadcast_for(c), t, c, Direction::down);
        const ParamVector local_personal = split(clients[c].theta, scheme).personalized;
        const ParamVector assembled = merge(received, local_personal, scheme);
        Rng rng(client_round_seed(cfg.seed, c, t));
        auto update = client_opt(cfg.client_opt, model, assembled, clients[c], data[c].train, cfg.client, penalty, rng);
        const ParamVector shared_grad = split(update.pseudo_gradient, scheme).shared;
        uploads[c] = result.ledger.communicate(shared_grad, t, c, Direction::up);
        losses[c] = update.mean_loss;
        clients[c] = std::move(update.state);
      } catch (const std::exception& e) {
        throw std::runtime_error(context(t, c) + e.what());
      }
    });
    try {
      server = server_opt(cfg.server_opt, server, uploads, cfg.server, sample_counts);
    } catch (const std::exception& e) {
      throw std::runtime_error("round " + std::to_string(t) + ", server: " + e.what());
    }

    RoundRecord rec;
    rec.round = t;
    rec.train_loss = std::move(losses);
    if (cfg.evaluate_validation) {
      std::vector<ParamVector> models;
      for (std::size_t c = 0; c < n; ++c) models.push_back(client_model(c));
      rec.val_mase = evaluate_round(model, models, val_splits, cfg.parallel);
    }
    result.ledger.canonicalize();
    rec.ledger = result.ledger.round_slice(t);
    result.rounds.push_back(std::move(rec));
  }

  result.server_shared = server.theta;
  for (std::size_t c = 0; c < n; ++c) result.client_models.push_back(client_model(c));
  result.client_states = std::move(clients);
  return result;
}

}  // namespace detail

/// Classical FL: the full parameter vector is broadcast and the full
/// pseudo-gradient uploaded every round. Written independently of the
/// partitioned loop, which must reproduce it exactly under P1.
inline FederationResult run_classical_fl(const FederationConfig& cfg, const LstmForecaster& model,
                                         const ParamVector& init, std::span<const DatasetSplits> data) {
  detail::require_clients(cfg, data);
  if (init.schema() != model.schema()) throw ShapeError("initial parameters do not match model schema");
  const std::size_t n = data.size();
  std::set<std::string> penalty;
  for (const auto& g : init.schema()) penalty.insert(g.name);

  ServerState server = make_server_state(cfg.server_opt, init, n);
  std::vector<ClientState> clients(n, make_client_state(cfg.client_opt, init));
  FederationResult result{ParamVector{}, {}, {}, {}, CommLedger(cfg.wire_bytes)};
  std::vector<double> sample_counts(n);
  std::vector<const WindowedDataset*> val_splits(n);
  for (std::size_t c = 0; c < n; ++c) {
    sample_counts[c] = static_cast<double>(data[c].train.size());
    val_splits[c] = &data[c].val;
  }

  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    std::vector<ParamVector> grads(n);
    std::vector<double> losses(n);
    parallel_for(n, cfg.parallel, [&](std::size_t c) {
      try {
        const ParamVector& theta0 = result.ledger.communicate(server.broadcast_for(c), t, c, Direction::down);
        Rng rng(client_round_seed(cfg.seed, c, t));
        auto update = client_opt(cfg.client_opt, model, theta0, clients[c], data[c].train, cfg.client, penalty, rng);
        grads[c] = result.ledger.communicate(update.pseudo_gradient, t, c, Direction::up);
        losses[c] = update.mean_loss;
        clients[c] = std::move(update.state);
      } catch (const std::exception& e) {
        throw std::runtime_error(detail::context(t, c) + e.what());
      }
    });
    try {
      server = server_opt(cfg.server_opt, server, grads, cfg.server, sample_counts);
    } catch (const std::exception& e) {
      throw std::runtime_error("round " + std::to_string(t) + ", server: " + e.what());
    }

    RoundRecord rec;
    rec.round = t;
    rec.train_loss = std::move(losses);
    if (cfg.evaluate_validation) {
      std::vector<ParamVector> models;
      for (std::size_t c = 0; c < n; ++c) models.push_back(server.broadcast_for(c));
      rec.val_mase = evaluate_round(model, models, val_splits, cfg.parallel);
    }
    result.ledger.canonicalize();
    rec.ledger = result.ledger.round_slice(t);
    result.rounds.push_back(std::move(rec));
  }

  result.server_shared = server.theta;
  for (std::size_t c = 0; c < n; ++c) result.client_models.push_back(server.broadcast_for(c));
  result.client_states = std::move(clients);
  return result;
}

/// PL-FL under `cfg.scheme`.
inline FederationResult run_pl_fl(const FederationConfig& cfg, const LstmForecaster& model, const ParamVector& init,
                                  std::span<const DatasetSplits> data) {
  return detail::run_partitioned(cfg, model, model.scheme(cfg.scheme), init, data);
}

/// PL-FL under an arbitrary partition of the model's groups.
inline FederationResult run_pl_fl(const FederationConfig& cfg, const LstmForecaster& model,
                                  const PartitionScheme& scheme, const ParamVector& init,
                                  std::span<const DatasetSplits> data) {
  return detail::run_partitioned(cfg, model, scheme, init, data);
}

}  // namespace plfl

#pragma once

// Server-side aggregation of client pseudo-gradients: FedAvg, FedAdagrad,
// FedYogi, FedAdam and FedAvgAdaptive (per-client server copies).
//
// Pseudo-gradients are descent displacements g = theta_old - theta_new, so
// every aggregator steps theta <- theta - eta_s * (...). The aggregate is the
// (optionally sample-weighted) client mean. `literal_formulas` switches to the
// literal variant: summed gradients, the ascent sign, non-accumulating
// FedAdagrad, subtractive FedAdam second moment and FedYogi with a
// beta-scaled leading term. Kept for auditing only.

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "plfl/numerics.hpp"
#include "plfl/param_vector.hpp"

namespace plfl {

enum class ServerOptKind { fedavg, fedadagrad, fedyogi, fedadam, fedavg_adaptive };

inline const std::vector<ServerOptKind>& all_server_opts() {
  static const std::vector<ServerOptKind> kinds{ServerOptKind::fedavg, ServerOptKind::fedadagrad,
                                                ServerOptKind::fedyogi, ServerOptKind::fedadam,
                                                ServerOptKind::fedavg_adaptive};
  return kinds;
}

inline std::string to_string(ServerOptKind k) {
  switch (k) {
    case ServerOptKind::fedavg: return "fedavg";
    case ServerOptKind::fedadagrad: return "fedadagrad";
    case ServerOptKind::fedyogi: return "fedyogi";
    case ServerOptKind::fedadam: return "fedadam";
    case ServerOptKind::fedavg_adaptive: return "fedavg_adaptive";
  }
  return "?";
}

inline ServerOptKind parse_server_opt(const std::string& s) {
  for (auto k : all_server_opts()) {
    if (to_string(k) == s) return k;
  }
  if (s == "FedAvg") return ServerOptKind::fedavg;
  if (s == "FedAdagrad") return ServerOptKind::fedadagrad;
  if (s == "FedYogi") return ServerOptKind::fedyogi;
  if (s == "FedAdam") return ServerOptKind::fedadam;
  if (s == "FedAvgAdaptive") return ServerOptKind::fedavg_adaptive;
  throw std::invalid_argument("unknown server optimizer '" + s + "'");
}

inline bool is_adaptive(ServerOptKind k) {
  return k == ServerOptKind::fedadagrad || k == ServerOptKind::fedyogi || k == ServerOptKind::fedadam;
}

struct ServerHyper {
  double lr = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-3;
  bool weight_by_samples = false;
  bool literal_formulas = false;

  void validate() const {
    if (!(lr > 0)) throw std::invalid_argument("server lr must be > 0");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) {
      throw std::invalid_argument("server betas must lie in [0, 1)");
    }
    if (!(eps > 0)) throw std::invalid_argument("server eps must be > 0");
  }
  bool operator==(const ServerHyper&) const = default;
};

/// Server state S_t. `theta` holds only the groups the server aggregates
/// (all of them in classical FL, the shared ones under personalization).
struct ServerState {
  ParamVector theta;
  std::optional<ParamVector> m;
  std::optional<ParamVector> v;
  std::vector<ParamVector> client_theta;  // FedAvgAdaptive only
  std::vector<ParamVector> client_v;      // FedAvgAdaptive only
  std::size_t rounds = 0;

  /// Parameters broadcast to client c.
  const ParamVector& broadcast_for(std::size_t c) const {
    if (client_theta.empty()) return theta;
    return client_theta.at(c);
  }
};

inline ServerState make_server_state(ServerOptKind kind, ParamVector theta, std::size_t n_clients) {
  if (n_clients == 0) throw std::invalid_argument("server needs at least one client");
  ServerState s;
  if (is_adaptive(kind)) {
    s.m = ParamVector::zeros_like(theta);
    s.v = ParamVector::zeros_like(theta);
  }
  if (kind == ServerOptKind::fedavg_adaptive) {
    s.client_theta.assign(n_clients, theta);
    s.client_v.assign(n_clients, ParamVector::zeros_like(theta));
  }
  s.theta = std::move(theta);
  return s;
}

/// Client-ordered weighted aggregate. Uniform weights give the mean; with
/// `literal_formulas` the plain sum.
inline ParamVector aggregate(std::span<const ParamVector> grads, std::span<const double> sample_counts,
                             const ServerHyper& hyper) {
  if (grads.empty()) throw std::invalid_argument("server_opt: no client gradients");
  std::vector<double> w(grads.size(), hyper.literal_formulas ? 1.0 : 1.0 / static_cast<double>(grads.size()));
  if (hyper.weight_by_samples && !hyper.literal_formulas) {
    if (sample_counts.size() != grads.size()) throw std::invalid_argument("sample counts do not match clients");
    double total = 0.0;
    for (double n : sample_counts) total += n;
    if (!(total > 0)) throw std::invalid_argument("sample counts must sum to > 0");
    for (std::size_t c = 0; c < grads.size(); ++c) w[c] = sample_counts[c] / total;
  }
  ParamVector g = ParamVector::zeros_like(grads[0]);
  for (std::size_t c = 0; c < grads.size(); ++c) g.axpy(w[c], grads[c]);
  return g;
}

inline ServerState server_opt(ServerOptKind kind, const ServerState& state, std::span<const ParamVector> grads,
                              const ServerHyper& hyper, std::span<const double> sample_counts = {}) {
  hyper.validate();
  if (grads.empty()) throw std::invalid_argument("server_opt: N = 0");
  for (const auto& g : grads) state.theta.require_same_schema(g, "server_opt");

  ServerState next = state;
  ++next.rounds;
  const double lr = hyper.lr;
  const double eps = hyper.eps;

  if (kind == ServerOptKind::fedavg_adaptive) {
    if (state.client_theta.size() != grads.size()) {
      throw std::invalid_argument("FedAvgAdaptive: gradient count differs from client count");
    }
    for (std::size_t c = 0; c < grads.size(); ++c) {
      auto th = next.client_theta[c].flat();
      auto v = next.client_v[c].flat();
      auto g = grads[c].flat();
      for (std::size_t j = 0; j < th.size(); ++j) {
        v[j] = hyper.beta1 * v[j] + (1.0 - hyper.beta1) * g[j] * g[j];
        th[j] -= lr * g[j] / (std::sqrt(v[j]) + eps);
      }
    }
    return next;
  }

  const ParamVector gbar = aggregate(grads, sample_counts, hyper);
  auto th = next.theta.flat();
  auto g = gbar.flat();

  const double direction = hyper.literal_formulas ? 1.0 : -1.0;
  if (kind == ServerOptKind::fedavg) {
    for (std::size_t j = 0; j < th.size(); ++j) th[j] += direction * lr * g[j];
    return next;
  }

  auto m = next.m->flat();
  auto v = next.v->flat();
  const double b1 = hyper.beta1;
  const double b2 = hyper.beta2;
  for (std::size_t j = 0; j < th.size(); ++j) {
    const double g2 = g[j] * g[j];
    m[j] = b1 * m[j] + (1.0 - b1) * g[j];
    switch (kind) {
      case ServerOptKind::fedadagrad:
        v[j] = hyper.literal_formulas ? g2 : v[j] + g2;
        break;
      case ServerOptKind::fedyogi:
        v[j] = (hyper.literal_formulas ? b2 * v[j] : v[j]) - (1.0 - b2) * g2 * sign(v[j] - g2);
        break;
      case ServerOptKind::fedadam:
        v[j] = hyper.literal_formulas ? b2 * v[j] - (1.0 - b2) * g2 : b2 * v[j] + (1.0 - b2) * g2;
        break;
      default:
        break;
    }
    th[j] += direction * lr * m[j] / (std::sqrt(v[j]) + eps);
  }
  return next;
}

}  // namespace plfl

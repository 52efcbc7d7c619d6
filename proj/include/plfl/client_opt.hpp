#pragma once

// Client-side local training: Adam, AdamAMS (AMSGrad), Prox (proximal SGD)
// and ProxAdam. Each call runs `local_steps` minibatch steps and returns the
// new client state together with the pseudo-gradient theta_start - theta_end.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "plfl/data.hpp"
#include "plfl/model.hpp"
#include "plfl/param_vector.hpp"

namespace plfl {

enum class ClientOptKind { adam, adam_ams, prox, prox_adam };

inline const std::vector<ClientOptKind>& all_client_opts() {
  static const std::vector<ClientOptKind> kinds{ClientOptKind::adam, ClientOptKind::adam_ams,
                                                ClientOptKind::prox, ClientOptKind::prox_adam};
  return kinds;
}

inline std::string to_string(ClientOptKind k) {
  switch (k) {
    case ClientOptKind::adam: return "adam";
    case ClientOptKind::adam_ams: return "adam_ams";
    case ClientOptKind::prox: return "prox";
    case ClientOptKind::prox_adam: return "prox_adam";
  }
  return "?";
}

inline ClientOptKind parse_client_opt(const std::string& s) {
  for (auto k : all_client_opts()) {
    if (to_string(k) == s) return k;
  }
  if (s == "Adam") return ClientOptKind::adam;
  if (s == "AdamAMS" || s == "amsgrad") return ClientOptKind::adam_ams;
  if (s == "Prox") return ClientOptKind::prox;
  if (s == "ProxAdam") return ClientOptKind::prox_adam;
  throw std::invalid_argument("unknown client optimizer '" + s + "'");
}

inline bool uses_moments(ClientOptKind k) { return k != ClientOptKind::prox; }
inline bool uses_proximal_term(ClientOptKind k) {
  return k == ClientOptKind::prox || k == ClientOptKind::prox_adam;
}
/// AdamAMS and ProxAdam continue from the client's own previous parameters;
/// Adam and Prox restart from the broadcast.
inline bool starts_from_local(ClientOptKind k) {
  return k == ClientOptKind::adam_ams || k == ClientOptKind::prox_adam;
}

struct ClientHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double alpha = 0.01;
  std::size_t local_steps = 10;
  std::size_t batch_size = 16;

  void validate() const {
    if (!(lr > 0)) throw std::invalid_argument("client lr must be > 0");
    if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1)) {
      throw std::invalid_argument("client betas must lie in [0, 1)");
    }
    if (!(eps > 0)) throw std::invalid_argument("client eps must be > 0");
    if (!(alpha >= 0)) throw std::invalid_argument("proximal alpha must be >= 0");
    if (local_steps < 1) throw std::invalid_argument("local_steps must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  }
  bool operator==(const ClientHyper&) const = default;
};

/// Local state C^c: theta always; m, v for the Adam family; v_max for AdamAMS.
struct ClientState {
  ParamVector theta;
  std::optional<ParamVector> m;
  std::optional<ParamVector> v;
  std::optional<ParamVector> v_max;
  std::size_t steps = 0;  // total local steps taken across calls
};

inline ClientState make_client_state(ClientOptKind kind, ParamVector theta) {
  ClientState s;
  if (uses_moments(kind)) {
    s.m = ParamVector::zeros_like(theta);
    s.v = ParamVector::zeros_like(theta);
  }
  if (kind == ClientOptKind::adam_ams) s.v_max = ParamVector::zeros_like(theta);
  s.theta = std::move(theta);
  return s;
}

/// Shuffled-permutation minibatches without replacement; reshuffles when the
/// permutation is exhausted (a batch may straddle two permutations).
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t n, Rng& rng) : rng_(rng), order_(n) {
    if (n == 0) throw std::invalid_argument("cannot sample from an empty dataset");
    for (std::size_t i = 0; i < n; ++i) order_[i] = i;
    rng_.shuffle(order_);
  }

  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    out.reserve(batch);
    while (out.size() < batch) {
      if (cursor_ == order_.size()) {
        rng_.shuffle(order_);
        cursor_ = 0;
      }
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  Rng& rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

/// grad = (1/B) sum_b d/dtheta (f(x_b) - y_b)^2; returns the minibatch MSE.
inline double minibatch_gradient(const LstmForecaster& model, const ParamVector& theta,
                                 const WindowedDataset& data, std::span<const std::size_t> batch,
                                 ParamVector& grad) {
  grad.fill(0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (std::size_t idx : batch) {
    auto [y_hat, tape] = model.forward(theta, data.input(idx));
    const double err = y_hat - data.label(idx);
    loss += err * err;
    model.backward_accumulate(tape, 2.0 * err * inv_b, grad);
  }
  return loss * inv_b;
}

struct ClientUpdate {
  ClientState state;
  ParamVector pseudo_gradient;
  double mean_loss = 0.0;  // average minibatch MSE over the local steps
};

/// Called after every local step with the 1-based step index and the state.
using StepObserver = std::function<void(std::size_t, const ClientState&)>;

/// One ClientOpt call.
///
/// `broadcast` is the full parameter vector the client assembled for this
/// round; it is the starting point for Adam/Prox and the proximal anchor for
/// Prox/ProxAdam. `penalty_groups` names the groups the proximal term
/// alpha * ||theta - broadcast||^2 covers. Moments are re-zeroed on every
/// call and bias correction uses the local step index.
inline ClientUpdate client_opt(ClientOptKind kind, const LstmForecaster& model, const ParamVector& broadcast,
                               const ClientState& state, const WindowedDataset& data, const ClientHyper& hyper,
                               const std::set<std::string>& penalty_groups, Rng& rng,
                               const StepObserver& observer = {}) {
  hyper.validate();
  if (broadcast.schema() != model.schema()) throw ShapeError("client_opt: broadcast does not match model schema");
  state.theta.require_same_schema(broadcast, "client_opt state");
  if (data.empty()) throw std::invalid_argument("client_opt: empty dataset");

  std::vector<char> penalized(broadcast.group_count(), 0);
  for (const auto& name : penalty_groups) penalized[broadcast.index_of(name)] = 1;

  ClientUpdate out;
  ClientState& s = out.state;
  s = make_client_state(kind, starts_from_local(kind) ? state.theta : broadcast);
  s.steps = state.steps;
  const ParamVector start = s.theta;

  MinibatchSampler sampler(data.size(), rng);
  ParamVector grad = ParamVector::zeros_like(start);
  double loss_sum = 0.0;
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  for (std::size_t step = 1; step <= hyper.local_steps; ++step) {
    const auto batch = sampler.next(hyper.batch_size);
    loss_sum += minibatch_gradient(model, s.theta, data, batch, grad);

    if (uses_proximal_term(kind) && hyper.alpha != 0.0) {
      for (std::size_t gi = 0; gi < grad.group_count(); ++gi) {
        if (!penalized[gi]) continue;
        auto g = grad.group(gi);
        auto th = s.theta.group(gi);
        auto anchor = broadcast.group(gi);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += 2.0 * hyper.alpha * (th[j] - anchor[j]);
      }
    }

    auto theta = s.theta.flat();
    auto g = grad.flat();
    if (kind == ClientOptKind::prox) {
      for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= hyper.lr * g[j];
    } else {
      beta1_pow *= hyper.beta1;
      beta2_pow *= hyper.beta2;
      const double c1 = 1.0 - beta1_pow;
      const double c2 = 1.0 - beta2_pow;
      auto m = s.m->flat();
      auto v = s.v->flat();
      const bool ams = kind == ClientOptKind::adam_ams;
      double* vmax = ams ? s.v_max->flat().data() : nullptr;
      for (std::size_t j = 0; j < theta.size(); ++j) {
        m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * g[j];
        v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * g[j] * g[j];
        const double m_hat = m[j] / c1;
        double v_hat = v[j] / c2;
        if (ams) {
          vmax[j] = std::max(vmax[j], v_hat);
          v_hat = vmax[j];
        }
        theta[j] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
      }
    }
    ++s.steps;
    if (observer) observer(step, s);
  }

  out.pseudo_gradient = start - s.theta;
  out.mean_loss = loss_sum / static_cast<double>(hyper.local_steps);
  return out;
}

}  // namespace plfl

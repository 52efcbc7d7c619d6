#pragma once

// Test-only reference implementations. These deliberately avoid the library's
// matrix kernels and model class: plain index loops over the flat groups.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "plfl/data.hpp"
#include "plfl/model.hpp"
#include "plfl/param_vector.hpp"

namespace plfl::oracle {

inline double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct ScalarCellOut {
  std::vector<double> h, c;
};

/// One LSTM cell step with explicit scalar loops.
inline ScalarCellOut lstm_cell(const ParamVector& p, const std::vector<double>& h_prev,
                               const std::vector<double>& c_prev, const std::vector<double>& x) {
  const std::size_t n = h_prev.size();
  const std::size_t m = x.size();
  auto gate = [&](char g, std::size_t j) {
    const auto wi = p.group(std::string("lstm.W_i") + g);
    const auto wh = p.group(std::string("lstm.W_h") + g);
    const auto b = p.group(std::string("lstm.b_") + g);
    double z = b[j];
    for (std::size_t k = 0; k < m; ++k) z += wi[j * m + k] * x[k];
    for (std::size_t k = 0; k < n; ++k) z += wh[j * n + k] * h_prev[k];
    return z;
  };
  ScalarCellOut out{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t j = 0; j < n; ++j) {
    const double i = sig(gate('i', j));
    const double f = sig(gate('f', j));
    const double g = std::tanh(gate('g', j));
    const double o = sig(gate('o', j));
    out.c[j] = f * c_prev[j] + i * g;
    out.h[j] = o * std::tanh(out.c[j]);
  }
  return out;
}

/// Full forecaster forward pass: LSTM rollout, concatenation, PReLU MLP.
inline double forecast(const ModelDims& dims, const ParamVector& p, const std::vector<std::vector<double>>& xs) {
  const std::size_t n = dims.hidden;
  std::vector<double> h(n, 0.0), c(n, 0.0), concat;
  for (const auto& x : xs) {
    auto step = lstm_cell(p, h, c, x);
    h = step.h;
    c = step.c;
    concat.insert(concat.end(), h.begin(), h.end());
  }
  const auto sizes = dims.mlp_layer_sizes();
  std::vector<double> a = concat;
  for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
    const std::string prefix = "mlp." + std::to_string(k) + ".";
    const auto w = p.group(prefix + "weight");
    const auto b = p.group(prefix + "bias");
    std::vector<double> z(sizes[k + 1]);
    for (std::size_t r = 0; r < z.size(); ++r) {
      double acc = b[r];
      for (std::size_t col = 0; col < a.size(); ++col) acc += w[r * a.size() + col] * a[col];
      z[r] = acc;
    }
    if (k + 2 < sizes.size()) {
      const double slope = p.group(prefix + "prelu")[0];
      for (auto& v : z) v = v > 0 ? v : slope * v;
    }
    a = z;
  }
  return a[0];
}

/// Central finite-difference gradient of f at p.
inline ParamVector finite_difference(const ParamVector& p, const std::function<double(const ParamVector&)>& f,
                                     double eps = 1e-5) {
  ParamVector grad = ParamVector::zeros_like(p);
  ParamVector probe = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = probe.flat()[i];
    probe.flat()[i] = orig + eps;
    const double up = f(probe);
    probe.flat()[i] = orig - eps;
    const double down = f(probe);
    probe.flat()[i] = orig;
    grad.flat()[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double max_relative_error(const ParamVector& a, const ParamVector& b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.flat()[i];
    const double y = b.flat()[i];
    const double denom = std::max({std::abs(x), std::abs(y), floor});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

/// Minibatch index order for `steps` batches of size b: a shuffled
/// permutation of [0, n), reshuffled when used up.
inline std::vector<std::vector<std::size_t>> minibatch_order(std::uint64_t seed, std::size_t n, std::size_t steps,
                                                             std::size_t b) {
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t cursor = 0;
  std::vector<std::vector<std::size_t>> out(steps);
  for (auto& batch : out) {
    for (std::size_t k = 0; k < b; ++k) {
      if (cursor == n) {
        rng.shuffle(order);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
  }
  return out;
}

/// Gradient of the batch mean squared error, one sample at a time.
inline ParamVector squared_error_gradient(const LstmForecaster& model, const WindowedDataset& data,
                                          const ParamVector& theta, const std::vector<std::size_t>& batch) {
  ParamVector g = ParamVector::zeros_like(theta);
  for (std::size_t i : batch) {
    auto [y, tape] = model.forward(theta, data.input(i));
    g.axpy(2.0 * (y - data.label(i)) / static_cast<double>(batch.size()), model.backward(tape, 1.0));
  }
  return g;
}

struct GradCheck {
  ModelDims dims;
  double max_rel_error = 0.0;
  std::size_t parameters = 0;
};

/// Random small config k: hidden in {2,3}, T in {1,2,4}, varying depth and
/// width. Compares backward() against central differences of forward().
inline GradCheck gradient_check(std::uint64_t k) {
  Rng rng(derive_seed(2024, k));
  static const std::vector<std::vector<std::size_t>> heads{{}, {3}, {4, 2}, {5, 3, 2}};
  ModelDims dims;
  dims.hidden = 2 + rng.below(2);
  dims.lookback = std::vector<std::size_t>{1, 2, 4}[rng.below(3)];
  dims.features = 1 + rng.below(3);
  dims.mlp_hidden = heads[rng.below(heads.size())];
  const LstmForecaster model(dims);
  ParamVector p = model.init_params(rng);
  for (auto& v : p.flat()) v = rng.uniform(-1.0, 1.0);
  for (const auto& g : p.schema()) {
    if (g.name.find("prelu") != std::string::npos) p.group(g.name)[0] = rng.uniform(0.05, 0.5);
  }
  const Vector x = sample_uniform(rng, -1.0, 1.0, dims.lookback * dims.input_dim());
  const ForecastInput input{x, dims.lookback, dims.input_dim()};

  auto [y, tape] = model.forward(p, input);
  const ParamVector analytic = model.backward(tape, 1.0);
  const ParamVector numeric = finite_difference(p, [&](const ParamVector& q) { return model.predict(q, input); });
  return {dims, max_relative_error(analytic, numeric), p.size()};
}

}  // namespace plfl::oracle

#pragma once

// LSTM load forecaster: an LSTMCell rolled over the look-back window from
// zero states, followed by an MLP head over the concatenated hidden states.
// Gradients are computed analytically by backpropagation through time.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plfl/numerics.hpp"
#include "plfl/param_vector.hpp"
#include "plfl/partition.hpp"

namespace plfl {

struct ModelDims {
  std::size_t features = 7;  // exogenous channels per step, load excluded
  std::size_t hidden = 25;
  std::size_t lookback = 12;
  std::vector<std::size_t> mlp_hidden{150, 75};

  std::size_t input_dim() const { return 1 + features; }

  /// Input width of every MLP layer followed by the scalar output width.
  std::vector<std::size_t> mlp_layer_sizes() const {
    std::vector<std::size_t> sizes{lookback * hidden};
    sizes.insert(sizes.end(), mlp_hidden.begin(), mlp_hidden.end());
    sizes.push_back(1);
    return sizes;
  }

  void validate() const {
    if (hidden == 0 || lookback == 0) throw std::invalid_argument("hidden and lookback must be >= 1");
    for (auto w : mlp_hidden) {
      if (w == 0) throw std::invalid_argument("MLP hidden widths must be >= 1");
    }
  }

  bool operator==(const ModelDims&) const = default;
};

inline constexpr double kInitialPreluSlope = 0.25;

/// One window of model input: `steps` rows of width 1 + d, row-major.
struct ForecastInput {
  std::span<const double> values;
  std::size_t steps = 0;
  std::size_t width = 0;

  std::span<const double> step(std::size_t t) const { return values.subspan(t * width, width); }
};

struct GateParams {
  ConstMatrixView input;      // hidden x input
  ConstMatrixView recurrent;  // hidden x hidden
  std::span<const double> bias;
};

/// Views into the twelve LSTMCell tensors, grouped per gate.
struct LstmCellParams {
  GateParams i, f, g, o;

  std::size_t hidden() const { return i.input.rows; }
  std::size_t input() const { return i.input.cols; }

  void validate() const {
    for (const GateParams* gate : {&i, &f, &g, &o}) {
      require_shape(gate->input.rows == hidden() && gate->input.cols == input(), "gate input weights");
      require_shape(gate->recurrent.rows == hidden() && gate->recurrent.cols == hidden(),
                    "gate recurrent weights");
      require_shape(gate->bias.size() == hidden(), "gate bias");
    }
  }
};

/// Intermediates of one cell step kept for the backward pass.
struct GateCache {
  Vector x, h_prev, c_prev;
  Vector i, f, g, o;
  Vector c, tanh_c;
};

struct CellOutput {
  Vector h;
  Vector c;
  GateCache cache;
};

inline CellOutput lstm_cell_forward(const LstmCellParams& p, std::span<const double> h_prev,
                                    std::span<const double> c_prev, std::span<const double> x) {
  p.validate();
  const std::size_t n = p.hidden();
  require_shape(h_prev.size() == n && c_prev.size() == n, "cell state width");
  require_shape(x.size() == p.input(), "cell input width");

  auto preact = [&](const GateParams& gate) {
    Vector z(gate.bias.begin(), gate.bias.end());
    matvec_accumulate(gate.input, x, z);
    matvec_accumulate(gate.recurrent, h_prev, z);
    return z;
  };

  CellOutput out;
  GateCache& k = out.cache;
  k.x.assign(x.begin(), x.end());
  k.h_prev.assign(h_prev.begin(), h_prev.end());
  k.c_prev.assign(c_prev.begin(), c_prev.end());
  k.i = elementwise(ElementOp::sigmoid, preact(p.i));
  k.f = elementwise(ElementOp::sigmoid, preact(p.f));
  k.g = elementwise(ElementOp::tanh, preact(p.g));
  k.o = elementwise(ElementOp::sigmoid, preact(p.o));
  k.c.resize(n);
  k.tanh_c.resize(n);
  out.h.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    k.c[j] = k.f[j] * c_prev[j] + k.i[j] * k.g[j];
    k.tanh_c[j] = std::tanh(k.c[j]);
    out.h[j] = k.o[j] * k.tanh_c[j];
  }
  out.c = k.c;
  return out;
}

/// Everything `backward` needs from a forward pass. Holds a pointer to the
/// parameters, which must outlive the tape.
struct Tape {
  const ParamVector* params = nullptr;
  std::vector<GateCache> cells;
  std::vector<Vector> layer_inputs;     // input to MLP layer k (k = 0 is [h_1..h_T])
  std::vector<Vector> pre_activations;  // W_k a_k + b_k
  double y_hat = 0.0;
};

enum class SchemeKind { p1, p2, p3 };

inline SchemeKind parse_scheme(const std::string& s) {
  if (s == "P1" || s == "p1") return SchemeKind::p1;
  if (s == "P2" || s == "p2") return SchemeKind::p2;
  if (s == "P3" || s == "p3") return SchemeKind::p3;
  throw std::invalid_argument("unknown partition scheme '" + s + "' (expected P1, P2 or P3)");
}

inline std::string to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::p1: return "P1";
    case SchemeKind::p2: return "P2";
    case SchemeKind::p3: return "P3";
  }
  return "?";
}

class LstmForecaster {
 public:
  static constexpr std::size_t kLstmGroups = 12;

  explicit LstmForecaster(ModelDims dims) : dims_(std::move(dims)) {
    dims_.validate();
    const std::size_t h = dims_.hidden;
    const std::size_t in = dims_.input_dim();
    for (const char gate : {'i', 'f', 'g', 'o'}) {
      groups_.push_back({std::string("lstm.W_i") + gate, h, in});
      groups_.push_back({std::string("lstm.W_h") + gate, h, h});
      groups_.push_back({std::string("lstm.b_") + gate, h, 1});
    }
    const auto sizes = dims_.mlp_layer_sizes();
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
      const std::string prefix = "mlp." + std::to_string(k) + ".";
      layers_.push_back({groups_.size(), groups_.size() + 1, 0, k + 2 < sizes.size()});
      groups_.push_back({prefix + "weight", sizes[k + 1], sizes[k]});
      groups_.push_back({prefix + "bias", sizes[k + 1], 1});
      if (layers_.back().has_prelu) {
        layers_.back().prelu = groups_.size();
        groups_.push_back({prefix + "prelu", 1, 1});
      }
    }
    for (const auto& g : groups_) count_ += g.size();
  }

  const ModelDims& dims() const { return dims_; }
  const std::vector<GroupSpec>& schema() const { return groups_; }
  std::size_t parameter_count() const { return count_; }

  static bool is_lstm_group(const std::string& name) { return name.rfind("lstm.", 0) == 0; }

  PartitionScheme scheme(SchemeKind kind) const {
    switch (kind) {
      case SchemeKind::p1:
        return PartitionScheme::from_predicate(groups_, [](const std::string&) { return true; });
      case SchemeKind::p2:
        return PartitionScheme::from_predicate(groups_, &LstmForecaster::is_lstm_group);
      case SchemeKind::p3:
        return PartitionScheme::from_predicate(groups_, [](const std::string&) { return false; });
    }
    throw std::invalid_argument("bad scheme kind");
  }

  /// Uniform fan-in initialization; PReLU slopes start at 0.25.
  ParamVector init_params(Rng& rng) const {
    ParamVector p(groups_);
    const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(dims_.hidden));
    for (std::size_t gi = 0; gi < kLstmGroups; ++gi) {
      for (auto& v : p.group(gi)) v = rng.uniform(-lstm_bound, lstm_bound);
    }
    for (const auto& layer : layers_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(groups_[layer.weight].cols));
      for (auto& v : p.group(layer.weight)) v = rng.uniform(-bound, bound);
      for (auto& v : p.group(layer.bias)) v = rng.uniform(-bound, bound);
      if (layer.has_prelu) p.group(layer.prelu)[0] = kInitialPreluSlope;
    }
    return p;
  }

  LstmCellParams cell_params(const ParamVector& p) const {
    require_schema(p);
    auto gate = [&](std::size_t base) {
      return GateParams{p.view(base), p.view(base + 1), p.group(base + 2)};
    };
    return {gate(0), gate(3), gate(6), gate(9)};
  }

  std::pair<double, Tape> forward(const ParamVector& p, ForecastInput input) const {
    require_schema(p);
    require_shape(input.steps == dims_.lookback, "input length != lookback");
    require_shape(input.width == dims_.input_dim(), "input width != 1 + features");
    require_shape(input.values.size() == input.steps * input.width, "input storage");

    Tape tape;
    tape.params = &p;
    const auto cell = cell_params(p);
    const std::size_t n = dims_.hidden;
    Vector h(n, 0.0), c(n, 0.0);
    Vector concat;
    concat.reserve(input.steps * n);
    tape.cells.reserve(input.steps);
    for (std::size_t t = 0; t < input.steps; ++t) {
      auto step = lstm_cell_forward(cell, h, c, input.step(t));
      h = std::move(step.h);
      c = std::move(step.c);
      concat.insert(concat.end(), h.begin(), h.end());
      tape.cells.push_back(std::move(step.cache));
    }

    Vector a = std::move(concat);
    for (const auto& layer : layers_) {
      Vector z(p.group(layer.bias).begin(), p.group(layer.bias).end());
      matvec_accumulate(p.view(layer.weight), a, z);
      tape.layer_inputs.push_back(std::move(a));
      if (layer.has_prelu) {
        const double slope = p.group(layer.prelu)[0];
        a.resize(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) a[j] = z[j] > 0.0 ? z[j] : slope * z[j];
      } else {
        a = z;
      }
      tape.pre_activations.push_back(std::move(z));
    }
    tape.y_hat = a[0];
    return {tape.y_hat, std::move(tape)};
  }

  double predict(const ParamVector& p, ForecastInput input) const { return forward(p, input).first; }

  /// grad += dL/dyhat * d(yhat)/d(theta)
  void backward_accumulate(const Tape& tape, double dl_dyhat, ParamVector& grad) const {
    if (tape.params == nullptr) throw std::invalid_argument("backward: empty tape");
    require_schema(*tape.params);
    require_schema(grad);
    if (tape.cells.size() != dims_.lookback || tape.layer_inputs.size() != layers_.size()) {
      throw ShapeError("backward: tape does not match model dims");
    }
    if (dl_dyhat == 0.0) return;
    const ParamVector& p = *tape.params;

    Vector dz{dl_dyhat};
    Vector da;
    for (std::size_t k = layers_.size(); k-- > 0;) {
      const auto& layer = layers_[k];
      outer_accumulate(dz, tape.layer_inputs[k], grad.view(layer.weight));
      auto db = grad.group(layer.bias);
      for (std::size_t j = 0; j < dz.size(); ++j) db[j] += dz[j];
      da.assign(tape.layer_inputs[k].size(), 0.0);
      matvec_transposed_accumulate(p.view(layer.weight), dz, da);
      if (k == 0) break;
      const auto& prev = layers_[k - 1];
      const Vector& z = tape.pre_activations[k - 1];
      const double slope = p.group(prev.prelu)[0];
      double dslope = 0.0;
      dz.assign(z.size(), 0.0);
      for (std::size_t j = 0; j < z.size(); ++j) {
        if (z[j] > 0.0) {
          dz[j] = da[j];
        } else {
          dz[j] = slope * da[j];
          dslope += da[j] * z[j];
        }
      }
      grad.group(prev.prelu)[0] += dslope;
    }

    // da now holds dL/d[h_1..h_T]; run BPTT.
    const std::size_t n = dims_.hidden;
    const auto cell = cell_params(p);
    Vector dh_next(n, 0.0), dc_next(n, 0.0);
    Vector dai(n), daf(n), dag(n), dao(n);
    for (std::size_t t = dims_.lookback; t-- > 0;) {
      const GateCache& k = tape.cells[t];
      for (std::size_t j = 0; j < n; ++j) {
        const double dh = da[t * n + j] + dh_next[j];
        const double dc = dc_next[j] + dh * k.o[j] * (1.0 - k.tanh_c[j] * k.tanh_c[j]);
        const double d_o = dh * k.tanh_c[j];
        const double d_i = dc * k.g[j];
        const double d_g = dc * k.i[j];
        const double d_f = dc * k.c_prev[j];
        dc_next[j] = dc * k.f[j];
        dai[j] = d_i * k.i[j] * (1.0 - k.i[j]);
        daf[j] = d_f * k.f[j] * (1.0 - k.f[j]);
        dag[j] = d_g * (1.0 - k.g[j] * k.g[j]);
        dao[j] = d_o * k.o[j] * (1.0 - k.o[j]);
      }
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      const std::pair<const Vector*, const GateParams*> gates[] = {
          {&dai, &cell.i}, {&daf, &cell.f}, {&dag, &cell.g}, {&dao, &cell.o}};
      for (std::size_t gi = 0; gi < 4; ++gi) {
        const Vector& d = *gates[gi].first;
        const std::size_t base = 3 * gi;
        outer_accumulate(d, k.x, grad.view(base));
        outer_accumulate(d, k.h_prev, grad.view(base + 1));
        auto db = grad.group(base + 2);
        for (std::size_t j = 0; j < n; ++j) db[j] += d[j];
        matvec_transposed_accumulate(gates[gi].second->recurrent, d, dh_next);
      }
    }
  }

  ParamVector backward(const Tape& tape, double dl_dyhat) const {
    ParamVector grad(groups_);
    backward_accumulate(tape, dl_dyhat, grad);
    return grad;
  }

 private:
  struct Layer {
    std::size_t weight;
    std::size_t bias;
    std::size_t prelu;
    bool has_prelu;
  };

  void require_schema(const ParamVector& p) const {
    if (p.schema() != groups_) throw ShapeError("parameter vector does not match model schema");
  }

  ModelDims dims_;
  std::vector<GroupSpec> groups_;
  std::vector<Layer> layers_;
  std::size_t count_ = 0;
};

}  // namespace plfl

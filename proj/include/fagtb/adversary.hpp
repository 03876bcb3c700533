/*
 * Copyright 2026 The fagtb Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Fully-connected adversary network: ReLU hidden layers, one raw logit out.
// The adversary reads the predictor's probability (plus the label in
// equalized-odds mode) and predicts the sensitive attribute. Besides the
// usual parameter gradients, it exposes the gradient of its loss with
// respect to its input, which the booster chains into its own residuals.

#ifndef FAGTB_ADVERSARY_HPP_
#define FAGTB_ADVERSARY_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fagtb/errors.hpp"
#include "fagtb/numeric.hpp"
#include "json.hpp"

namespace fagtb {

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> biases;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), biases(out_dim, 0.0) {}

  double& w(std::size_t o, std::size_t i) { return weights[o * in + i]; }
  double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }
};

// Parameters of a network; gradients share the same shape.
struct NetParameters {
  std::vector<DenseLayer> layers;

  static NetParameters zeros_like(const NetParameters& other) {
    NetParameters z;
    for (const auto& l : other.layers) z.layers.emplace_back(l.in, l.out);
    return z;
  }

  std::size_t size() const {
    std::size_t k = 0;
    for (const auto& l : layers) k += l.weights.size() + l.biases.size();
    return k;
  }

  // Visits every scalar in a fixed order (layer by layer, weights then biases).
  template <typename Fn>
  void for_each(Fn&& fn) {
    for (auto& l : layers) {
      for (double& v : l.weights) fn(v);
      for (double& v : l.biases) fn(v);
    }
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& l : layers) {
      for (double v : l.weights) fn(v);
      for (double v : l.biases) fn(v);
    }
  }

  double norm() const {
    double acc = 0.0;
    for_each([&](double v) { acc += v * v; });
    return std::sqrt(acc);
  }
};

// A batch of adversary inputs (row-major, `dim` columns) and 0/1 targets.
struct AdversaryBatch {
  std::size_t dim = 1;
  std::vector<double> inputs;
  std::vector<int> targets;

  std::size_t size() const { return targets.size(); }
  std::span<const double> input(std::size_t i) const {
    return {inputs.data() + i * dim, dim};
  }
};

class AdversaryNet {
 public:
  AdversaryNet() = default;

  // All-zero network with the given layer sizes [d_in, h_1, ..., h_L, 1].
  explicit AdversaryNet(const std::vector<std::size_t>& layer_sizes) {
    if (layer_sizes.size() < 2 || layer_sizes.back() != 1) {
      throw ArgumentError("adversary layer sizes must be [d_in, ..., 1]");
    }
    for (std::size_t k = 0; k + 1 < layer_sizes.size(); ++k) {
      if (layer_sizes[k] == 0) throw ArgumentError("adversary layer of width 0");
      params_.layers.emplace_back(layer_sizes[k], layer_sizes[k + 1]);
    }
  }

  explicit AdversaryNet(NetParameters params) : params_(std::move(params)) {}

  std::size_t input_dim() const { return params_.layers.front().in; }

  std::vector<std::size_t> layer_sizes() const {
    std::vector<std::size_t> sizes{params_.layers.front().in};
    for (const auto& l : params_.layers) sizes.push_back(l.out);
    return sizes;
  }

  const NetParameters& params() const { return params_; }
  NetParameters& params() { return params_; }

  bool all_finite() const {
    bool ok = true;
    params_.for_each([&](double v) { ok = ok && std::isfinite(v); });
    return ok;
  }

  nlohmann::json to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : params_.layers) {
      layers.push_back({{"weights", l.weights}, {"biases", l.biases}});
    }
    return {{"layer_sizes", layer_sizes()}, {"layers", std::move(layers)}};
  }

  static AdversaryNet from_json(const nlohmann::json& j) {
    AdversaryNet net(j.at("layer_sizes").get<std::vector<std::size_t>>());
    const auto& layers = j.at("layers");
    if (layers.size() != net.params_.layers.size()) {
      throw DataError("adversary layer count does not match layer_sizes");
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
      auto& l = net.params_.layers[k];
      auto w = layers[k].at("weights").get<std::vector<double>>();
      auto b = layers[k].at("biases").get<std::vector<double>>();
      if (w.size() != l.weights.size() || b.size() != l.biases.size()) {
        throw DataError("adversary layer " + std::to_string(k) + " has wrong shape");
      }
      l.weights = std::move(w);
      l.biases = std::move(b);
    }
    return net;
  }

 private:
  NetParameters params_;
};

// Reusable forward/backward buffers for one network shape. Evaluation only
// reads the network, so one workspace per thread is enough for concurrency.
class NetWorkspace {
 public:
  explicit NetWorkspace(const AdversaryNet& net) {
    const auto& layers = net.params().layers;
    act_.resize(layers.size() + 1);
    grad_.resize(layers.size() + 1);
    act_[0].resize(layers.front().in);
    grad_[0].resize(layers.front().in);
    for (std::size_t k = 0; k < layers.size(); ++k) {
      act_[k + 1].resize(layers[k].out);
      grad_[k + 1].resize(layers[k].out);
    }
  }

  // Returns the output logit; hidden activations are kept for backward().
  double forward(const AdversaryNet& net, std::span<const double> v) {
    const auto& layers = net.params().layers;
    if (v.size() != layers.front().in) {
      throw ArgumentError("adversary expects input of dimension " +
                          std::to_string(layers.front().in) + ", got " +
                          std::to_string(v.size()));
    }
    std::copy(v.begin(), v.end(), act_[0].begin());
    for (std::size_t k = 0; k < layers.size(); ++k) {
      const DenseLayer& l = layers[k];
      const bool hidden = k + 1 < layers.size();
      const std::vector<double>& x = act_[k];
      std::vector<double>& z = act_[k + 1];
      for (std::size_t o = 0; o < l.out; ++o) {
        double acc = l.biases[o];
        const double* row = l.weights.data() + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) acc += row[i] * x[i];
        z[o] = hidden && acc < 0.0 ? 0.0 : acc;
      }
    }
    return act_.back()[0];
  }

  // Backpropagates dLoss/dlogit from the last forward(). Accumulates scaled
  // parameter gradients into `param_grad` when non-null; afterwards
  // input_grad() holds dLoss/dv.
  void backward(const AdversaryNet& net, double dlogit, NetParameters* param_grad,
                double scale = 1.0) {
    const auto& layers = net.params().layers;
    grad_.back()[0] = dlogit;
    for (std::size_t k = layers.size(); k-- > 0;) {
      const DenseLayer& l = layers[k];
      std::vector<double>& g_out = grad_[k + 1];
      if (k + 1 < layers.size()) {
        // ReLU: act > 0 exactly when the pre-activation was positive.
        for (std::size_t o = 0; o < l.out; ++o) {
          if (act_[k + 1][o] <= 0.0) g_out[o] = 0.0;
        }
      }
      if (param_grad != nullptr) {
        DenseLayer& gl = param_grad->layers[k];
        for (std::size_t o = 0; o < l.out; ++o) {
          const double g = g_out[o] * scale;
          if (g == 0.0) continue;
          gl.biases[o] += g;
          double* row = gl.weights.data() + o * l.in;
          for (std::size_t i = 0; i < l.in; ++i) row[i] += g * act_[k][i];
        }
      }
      std::vector<double>& g_in = grad_[k];
      std::fill(g_in.begin(), g_in.end(), 0.0);
      for (std::size_t o = 0; o < l.out; ++o) {
        const double g = g_out[o];
        if (g == 0.0) continue;
        const double* row = l.weights.data() + o * l.in;
        for (std::size_t i = 0; i < l.in; ++i) g_in[i] += g * row[i];
      }
    }
  }

  std::span<const double> input_grad() const { return grad_[0]; }

 private:
  std::vector<std::vector<double>> act_;
  std::vector<std::vector<double>> grad_;
};

// Derivative of the clipped Bernoulli NLL with respect to the logit. Inside
// the clip range this is sigmoid(logit) - target; where the probability is
// clipped the loss is flat and the derivative is 0.
inline double nll_logit_derivative(int target, double logit) {
  const double p = sigmoid(logit);
  if (p < kProbabilityClip || p > 1.0 - kProbabilityClip) return 0.0;
  return p - static_cast<double>(target);
}

inline double forward(const AdversaryNet& net, std::span<const double> v) {
  NetWorkspace ws(net);
  return ws.forward(net, v);
}

inline double adversary_loss(const AdversaryNet& net, std::span<const double> v, int s) {
  return bernoulli_nll(s, forward(net, v));
}

inline double adversary_loss(const AdversaryNet& net, const AdversaryBatch& batch) {
  if (batch.size() == 0) throw ArgumentError("empty adversary batch");
  NetWorkspace ws(net);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total += bernoulli_nll(batch.targets[i], ws.forward(net, batch.input(i)));
  }
  return total / static_cast<double>(batch.size());
}

// Mean over the batch of the exact per-sample loss gradients.
inline NetParameters param_gradients(const AdversaryNet& net, const AdversaryBatch& batch) {
  if (batch.size() == 0) throw ArgumentError("empty adversary batch");
  if (batch.dim != net.input_dim()) throw ArgumentError("batch dimension mismatch");
  NetParameters grad = NetParameters::zeros_like(net.params());
  NetWorkspace ws(net);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double logit = ws.forward(net, batch.input(i));
    ws.backward(net, nll_logit_derivative(batch.targets[i], logit), &grad, scale);
  }
  return grad;
}

inline std::vector<double> input_gradient(const AdversaryNet& net,
                                          std::span<const double> v, int s) {
  NetWorkspace ws(net);
  const double logit = ws.forward(net, v);
  ws.backward(net, nll_logit_derivative(s, logit), nullptr);
  const auto g = ws.input_grad();
  return {g.begin(), g.end()};
}

// theta <- theta - learning_rate * grad
inline void sgd_step(AdversaryNet& net, const NetParameters& grad, double learning_rate) {
  auto& layers = net.params().layers;
  if (grad.layers.size() != layers.size()) throw ArgumentError("gradient shape mismatch");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (grad.layers[k].weights.size() != layers[k].weights.size() ||
        grad.layers[k].biases.size() != layers[k].biases.size()) {
      throw ArgumentError("gradient shape mismatch at layer " + std::to_string(k));
    }
  }
  bool finite = true;
  grad.for_each([&](double g) { finite = finite && std::isfinite(g); });
  if (!finite) {
    throw TrainingError("non-finite adversary gradient (norm " +
                        std::to_string(grad.norm()) + ")");
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto& l = layers[k];
    const auto& g = grad.layers[k];
    for (std::size_t i = 0; i < l.weights.size(); ++i) l.weights[i] -= learning_rate * g.weights[i];
    for (std::size_t i = 0; i < l.biases.size(); ++i) l.biases[i] -= learning_rate * g.biases[i];
  }
}

// Adam with a configurable first-moment decay; beta1 = 0 (the default)
// drops momentum and leaves a bias-corrected RMS-scaled step.
class AdamOptimizer {
 public:
  AdamOptimizer(const AdversaryNet& net, double beta1 = 0.0, double beta2 = 0.999,
                double epsilon = 1e-8)
      : beta1_(beta1), beta2_(beta2), epsilon_(epsilon),
        m_(NetParameters::zeros_like(net.params())),
        v_(NetParameters::zeros_like(net.params())) {}

  void step(AdversaryNet& net, const NetParameters& grad, double learning_rate) {
    ++t_;
    const double c1 = beta1_ > 0.0 ? 1.0 - std::pow(beta1_, static_cast<double>(t_)) : 1.0;
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    NetParameters update = NetParameters::zeros_like(net.params());
    for (std::size_t k = 0; k < grad.layers.size(); ++k) {
      auto apply = [&](const std::vector<double>& g, std::vector<double>& m,
                       std::vector<double>& v, std::vector<double>& u) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
          v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
          u[i] = (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon_);
        }
      };
      apply(grad.layers[k].weights, m_.layers[k].weights, v_.layers[k].weights,
            update.layers[k].weights);
      apply(grad.layers[k].biases, m_.layers[k].biases, v_.layers[k].biases,
            update.layers[k].biases);
    }
    sgd_step(net, update, learning_rate);
  }

 private:
  double beta1_;
  double beta2_;
  double epsilon_;
  NetParameters m_;
  NetParameters v_;
  std::int64_t t_ = 0;
};

// Weights ~ U(-sqrt(6 / (fan_in + fan_out)), +sqrt(...)), biases 0.
inline AdversaryNet init_xavier(const std::vector<std::size_t>& layer_sizes,
                                std::uint64_t seed) {
  AdversaryNet net(layer_sizes);
  auto rng = make_stream(seed, "init");
  for (auto& l : net.params().layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : l.weights) w = dist(rng);
  }
  return net;
}

}  // namespace fagtb

#endif  // FAGTB_ADVERSARY_HPP_

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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fagtb/adversary.hpp"
#include "fagtb/errors.hpp"
#include "test_util.hpp"

namespace fagtb {
namespace {

using testing::central_difference;
using testing::relative_error;

// Independent forward pass; also reports the smallest |pre-activation| of
// any hidden unit so callers can stay away from ReLU kinks.
double reference_forward(const AdversaryNet& net, const std::vector<double>& v,
                         double* min_margin = nullptr) {
  std::vector<double> x = v;
  const auto& layers = net.params().layers;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    std::vector<double> z(layers[k].out);
    for (std::size_t o = 0; o < z.size(); ++o) {
      double acc = layers[k].biases[o];
      for (std::size_t i = 0; i < x.size(); ++i) acc += layers[k].w(o, i) * x[i];
      if (k + 1 < layers.size()) {
        if (min_margin != nullptr) *min_margin = std::min(*min_margin, std::abs(acc));
        acc = std::max(acc, 0.0);
      }
      z[o] = acc;
    }
    x = std::move(z);
  }
  return x[0];
}

AdversaryNet random_net(const std::vector<std::size_t>& sizes, std::mt19937_64& rng) {
  AdversaryNet net(sizes);
  std::normal_distribution<double> normal(0.0, 0.8);
  net.params().for_each([&](double& v) { v = normal(rng); });
  return net;
}

AdversaryBatch random_batch(std::size_t dim, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.02, 0.98);
  std::bernoulli_distribution coin(0.5);
  AdversaryBatch batch;
  batch.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    batch.inputs.push_back(unit(rng));
    if (dim == 2) batch.inputs.push_back(coin(rng) ? 1.0 : 0.0);
    batch.targets.push_back(coin(rng) ? 1 : 0);
  }
  return batch;
}

double batch_margin(const AdversaryNet& net, const AdversaryBatch& batch) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto in = batch.input(i);
    reference_forward(net, {in.begin(), in.end()}, &margin);
  }
  return margin;
}

AdversaryNet one_unit(double w, double b) {
  AdversaryNet net({1, 1});
  net.params().layers[0].weights[0] = w;
  net.params().layers[0].biases[0] = b;
  return net;
}

TEST(Forward, ZeroNetworkGivesZeroLogit) {
  const AdversaryNet net({2, 16, 8, 1});
  EXPECT_EQ(forward(net, std::vector<double>{0.3, 1.0}), 0.0);
  EXPECT_EQ(sigmoid(forward(net, std::vector<double>{0.3, 1.0})), 0.5);
}

TEST(Forward, OneUnitNet) {
  const double logit = forward(one_unit(1.0, 0.0), std::vector<double>{0.5});
  EXPECT_EQ(logit, 0.5);
  EXPECT_NEAR(sigmoid(logit), 0.622459, 1e-6);
}

TEST(Forward, DeadReluUnitPassesOnlyOutputBias) {
  AdversaryNet net({1, 1, 1});
  net.params().layers[0].weights[0] = -2.0;
  net.params().layers[0].biases[0] = 0.1;
  net.params().layers[1].weights[0] = 3.0;
  net.params().layers[1].biases[0] = -0.25;
  EXPECT_EQ(forward(net, std::vector<double>{0.5}), -0.25);
}

TEST(Forward, MatchesReferenceImplementation) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto net = random_net({2, 5, 3, 1}, rng);
    const auto batch = random_batch(2, 4, rng);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const auto in = batch.input(i);
      EXPECT_NEAR(forward(net, in), reference_forward(net, {in.begin(), in.end()}), 1e-12);
    }
  }
}

TEST(Forward, DimensionMismatchIsArgumentError) {
  const AdversaryNet net({1, 4, 1});
  EXPECT_THROW(forward(net, std::vector<double>{0.1, 0.2}), ArgumentError);
  EXPECT_THROW(input_gradient(net, std::vector<double>{0.1, 0.2}, 1), ArgumentError);
}

TEST(AdversaryLoss, KnownValues) {
  const AdversaryNet zero({1, 1});
  EXPECT_NEAR(adversary_loss(zero, std::vector<double>{0.4}, 1), 0.693147, 1e-6);
  EXPECT_NEAR(adversary_loss(zero, std::vector<double>{0.4}, 0), 0.693147, 1e-6);
  EXPECT_NEAR(adversary_loss(one_unit(1.0, 0.0), std::vector<double>{0.5}, 1), 0.474077, 1e-6);
}

TEST(AdversaryLoss, BoundedByClip) {
  const auto net = one_unit(1e4, 0.0);
  const double cap = -std::log(kProbabilityClip);
  EXPECT_NEAR(adversary_loss(net, std::vector<double>{0.9}, 0), cap, 1e-9);
  EXPECT_GE(adversary_loss(net, std::vector<double>{0.9}, 1), 0.0);
  EXPECT_TRUE(std::isfinite(adversary_loss(net, std::vector<double>{0.9}, 0)));
}

TEST(ParamGradients, OneUnitClosedForm) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double w = uni(rng), b = uni(rng), v = unit(rng);
    const int s = trial % 2;
    AdversaryBatch batch{1, {v}, {s}};
    const auto g = param_gradients(one_unit(w, b), batch);
    const double residual = sigmoid(w * v + b) - s;
    EXPECT_NEAR(g.layers[0].weights[0], residual * v, 1e-12);
    EXPECT_NEAR(g.layers[0].biases[0], residual, 1e-12);
  }
}

TEST(ParamGradients, NearZeroAtOptimum) {
  // Logits of +-40 put every prediction inside the clipped region.
  AdversaryBatch batch{1, {0.9, 0.1, 0.8}, {1, 0, 1}};
  const auto g = param_gradients(one_unit(100.0, -50.0), batch);
  EXPECT_LE(g.norm(), 10.0 * kProbabilityClip);
}

TEST(ParamGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  int instances = 0;
  while (instances < 120) {
    const std::size_t dim = 1 + instances % 2;
    const auto net = random_net({dim, 6, 4, 1}, rng);
    const auto batch = random_batch(dim, 5, rng);
    if (batch_margin(net, batch) < 1e-3) continue;
    ++instances;
    const auto grad = param_gradients(net, batch);
    std::vector<double> analytic;
    grad.for_each([&](double g) { analytic.push_back(g); });
    std::size_t idx = 0;
    AdversaryNet probe = net;
    probe.params().for_each([&](double& theta) {
      const double saved = theta;
      const double fd = central_difference(
          [&](double x) {
            theta = x;
            return adversary_loss(probe, batch);
          },
          saved);
      theta = saved;
      EXPECT_LE(relative_error(analytic[idx], fd, 1e-6), 1e-4)
          << "parameter " << idx << " analytic " << analytic[idx] << " fd " << fd;
      ++idx;
    });
  }
}

TEST(ParamGradients, EmptyBatchIsArgumentError) {
  EXPECT_THROW(param_gradients(one_unit(1, 0), AdversaryBatch{}), ArgumentError);
}

TEST(InputGradient, ZeroWeightNetHasZeroGradient) {
  const AdversaryNet net({2, 8, 1});
  const auto g = input_gradient(net, std::vector<double>{0.3, 1.0}, 1);
  EXPECT_EQ(g, (std::vector<double>{0.0, 0.0}));
}

TEST(InputGradient, OneUnitClosedForm) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double w = uni(rng), b = uni(rng), v = unit(rng);
    const int s = trial % 2;
    const auto g = input_gradient(one_unit(w, b), std::vector<double>{v}, s);
    EXPECT_NEAR(g[0], (sigmoid(w * v + b) - s) * w, 1e-12);
  }
}

TEST(InputGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  int instances = 0;
  while (instances < 150) {
    const std::size_t dim = 1 + instances % 2;
    const auto net = random_net({dim, 7, 5, 1}, rng);
    const auto batch = random_batch(dim, 1, rng);
    if (batch_margin(net, batch) < 1e-3) continue;
    ++instances;
    std::vector<double> v(batch.inputs);
    const int s = batch.targets[0];
    const auto g = input_gradient(net, v, s);
    for (std::size_t d = 0; d < dim; ++d) {
      const double saved = v[d];
      const double fd = central_difference(
          [&](double x) {
            v[d] = x;
            return adversary_loss(net, v, s);
          },
          saved);
      v[d] = saved;
      EXPECT_LE(relative_error(g[d], fd, 1e-6), 1e-4) << "coordinate " << d;
    }
  }
}

TEST(SgdStep, ZeroRateLeavesParametersUnchanged) {
  std::mt19937_64 rng(6);
  auto net = random_net({1, 3, 1}, rng);
  const auto before = net.to_json();
  auto g = NetParameters::zeros_like(net.params());
  g.for_each([](double& v) { v = 1.0; });
  sgd_step(net, g, 0.0);
  EXPECT_EQ(net.to_json(), before);
}

TEST(SgdStep, Arithmetic) {
  auto net = one_unit(1.0, 0.0);
  auto g = NetParameters::zeros_like(net.params());
  g.layers[0].weights[0] = 2.0;
  sgd_step(net, g, 0.1);
  EXPECT_DOUBLE_EQ(net.params().layers[0].weights[0], 0.8);
  EXPECT_EQ(net.params().layers[0].biases[0], 0.0);
}

TEST(SgdStep, NonFiniteGradientIsTrainingError) {
  auto net = one_unit(1.0, 0.0);
  auto g = NetParameters::zeros_like(net.params());
  g.layers[0].biases[0] = std::nan("");
  EXPECT_THROW(sgd_step(net, g, 0.1), TrainingError);
  EXPECT_EQ(net.params().layers[0].weights[0], 1.0);
}

TEST(SgdStep, ShapeMismatchIsArgumentError) {
  auto net = one_unit(1.0, 0.0);
  const AdversaryNet other({1, 2, 1});
  EXPECT_THROW(sgd_step(net, NetParameters::zeros_like(other.params()), 0.1), ArgumentError);
}

TEST(SgdStep, LossDecreasesOnSeparableBatch) {
  auto net = one_unit(0.0, 0.0);
  const AdversaryBatch batch{1, {0.1, 0.2, 0.3, 0.7, 0.8, 0.9}, {0, 0, 0, 1, 1, 1}};
  double previous = adversary_loss(net, batch);
  for (int step = 0; step < 10; ++step) {
    sgd_step(net, param_gradients(net, batch), 0.1);
    const double loss = adversary_loss(net, batch);
    EXPECT_LT(loss, previous) << "step " << step;
    previous = loss;
  }
}

TEST(Adam, FirstStepMovesEachParameterByTheRate) {
  auto net = one_unit(1.0, 0.5);
  AdamOptimizer adam(net);
  auto g = NetParameters::zeros_like(net.params());
  g.layers[0].weights[0] = 3.0;
  g.layers[0].biases[0] = -0.02;
  adam.step(net, g, 0.01);
  EXPECT_NEAR(net.params().layers[0].weights[0], 0.99, 1e-6);
  EXPECT_NEAR(net.params().layers[0].biases[0], 0.51, 1e-6);
}

TEST(Adam, LossDecreasesOnSeparableBatch) {
  auto net = one_unit(0.0, 0.0);
  AdamOptimizer adam(net);
  const AdversaryBatch batch{1, {0.1, 0.2, 0.3, 0.7, 0.8, 0.9}, {0, 0, 0, 1, 1, 1}};
  const double initial = adversary_loss(net, batch);
  for (int step = 0; step < 50; ++step) adam.step(net, param_gradients(net, batch), 0.05);
  EXPECT_LT(adversary_loss(net, batch), initial);
}

TEST(InitXavier, DeterministicAndBounded) {
  const auto a = init_xavier({4, 8, 1}, 12);
  const auto b = init_xavier({4, 8, 1}, 12);
  const auto c = init_xavier({4, 8, 1}, 13);
  EXPECT_EQ(a.to_json(), b.to_json());
  EXPECT_NE(a.to_json(), c.to_json());
  const double limit = std::sqrt(6.0 / 12.0);
  for (double w : a.params().layers[0].weights) EXPECT_LE(std::abs(w), limit);
  for (const auto& l : a.params().layers) {
    for (double bias : l.biases) EXPECT_EQ(bias, 0.0);
  }
}

TEST(InitXavier, EmpiricalMeanNearZero) {
  const auto net = init_xavier({100, 100, 1}, 7);
  const auto& w = net.params().layers[0].weights;
  ASSERT_EQ(w.size(), 10000u);
  double sum = 0.0;
  for (double v : w) sum += v;
  EXPECT_NEAR(sum / 10000.0, 0.0, 0.02);
}

TEST(AdversaryNet, JsonRoundTrip) {
  const auto net = init_xavier({2, 16, 8, 1}, 3);
  const auto back = AdversaryNet::from_json(nlohmann::json::parse(net.to_json().dump()));
  EXPECT_EQ(back.to_json(), net.to_json());
  EXPECT_EQ(back.layer_sizes(), (std::vector<std::size_t>{2, 16, 8, 1}));
}

TEST(AdversaryNet, RejectsBadShapes) {
  EXPECT_THROW(AdversaryNet(std::vector<std::size_t>{1}), ArgumentError);
  EXPECT_THROW(AdversaryNet(std::vector<std::size_t>{1, 4, 2}), ArgumentError);
  EXPECT_THROW(AdversaryNet(std::vector<std::size_t>{1, 0, 1}), ArgumentError);
  auto j = init_xavier({1, 3, 1}, 1).to_json();
  j["layers"][0]["weights"].push_back(1.0);
  EXPECT_THROW(AdversaryNet::from_json(j), DataError);
}

}  // namespace
}  // namespace fagtb

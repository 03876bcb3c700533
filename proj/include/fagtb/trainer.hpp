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

// Gradient tree boosting for binary classification with an optional
// adversarial fairness penalty.
//
// The booster minimizes sum_i L_F(y_i, F(x_i)) - lambda * sum_i L_A(F(x_i))
// where L_F is the logistic NLL of the predictor and L_A the NLL of an
// adversary that predicts s from sigma(F(x)) (and y, for equalized odds).
// Each stage fits a regression tree to u = r - lambda * t, with r the
// predictor pseudo-residuals and t = -dL_A/dF obtained by backpropagating
// through the adversary to its input and through the sigmoid link. After
// every stage the adversary takes a few full-batch gradient steps on the
// updated scores. With lambda = 0 the stage sequence is exactly that of
// plain gradient boosting.

#ifndef FAGTB_TRAINER_HPP_
#define FAGTB_TRAINER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "fagtb/adversary.hpp"
#include "fagtb/cart.hpp"
#include "fagtb/data.hpp"
#include "fagtb/errors.hpp"
#include "fagtb/metrics.hpp"
#include "fagtb/model.hpp"
#include "fagtb/numeric.hpp"
#include "json.hpp"

namespace fagtb {

// How the configured lambda is turned into the per-sample residual weight.
//   kPerSample: u_i = r_i - lambda * t_i.
//   kDataset:   u_i = r_i - (lambda * n_train) * t_i, i.e. the adversary loss
//               is summed over the training set while the predictor loss is
//               averaged; lambda values then stay comparable across sizes.
enum class LambdaScaling { kPerSample, kDataset };
enum class AdversaryOptimizer { kSgd, kAdam };

struct TrainConfig {
  FairnessMode mode = FairnessMode::kPlain;
  std::size_t iterations = 100;
  double lambda = 0.0;
  LambdaScaling lambda_scaling = LambdaScaling::kDataset;
  double shrinkage = 0.1;
  double adversary_lr = 1.0;
  std::size_t adversary_steps_per_iter = 5;
  std::size_t warmstart_iters = 20;
  std::size_t adversary_pretrain_epochs = 20;
  TreeParams tree{3, 1};
  std::vector<std::size_t> adversary_hidden{16, 8};
  AdversaryOptimizer adversary_optimizer = AdversaryOptimizer::kSgd;
  bool use_line_search = false;
  double line_search_max = 10.0;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
    if (!(shrinkage > 0.0) || !std::isfinite(shrinkage)) throw ConfigError("shrinkage must be > 0");
    if (!(adversary_lr > 0.0) || !std::isfinite(adversary_lr)) {
      throw ConfigError("adversary_lr must be > 0");
    }
    if (adversary_steps_per_iter < 1) throw ConfigError("adversary_steps_per_iter must be >= 1");
    if (tree.max_depth < 0) throw ConfigError("max_depth must be >= 0");
    if (tree.min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
      throw ConfigError("validation_fraction must lie in [0, 1)");
    }
    if (!(line_search_max > 0.0)) throw ConfigError("line_search_max must be > 0");
    for (std::size_t h : adversary_hidden) {
      if (h == 0) throw ConfigError("adversary_hidden entries must be >= 1");
    }
  }

  std::vector<std::size_t> adversary_layers() const {
    std::vector<std::size_t> sizes{adversary_input_dim(mode)};
    sizes.insert(sizes.end(), adversary_hidden.begin(), adversary_hidden.end());
    sizes.push_back(1);
    return sizes;
  }

  nlohmann::json to_json() const {
    return {{"mode", std::string(to_string(mode))},
            {"iterations", iterations},
            {"lambda", lambda},
            {"lambda_scaling", lambda_scaling == LambdaScaling::kDataset ? "dataset" : "per_sample"},
            {"shrinkage", shrinkage},
            {"adversary_lr", adversary_lr},
            {"adversary_steps_per_iter", adversary_steps_per_iter},
            {"warmstart_iters", warmstart_iters},
            {"adversary_pretrain_epochs", adversary_pretrain_epochs},
            {"max_depth", tree.max_depth},
            {"min_samples_leaf", tree.min_samples_leaf},
            {"adversary_hidden", adversary_hidden},
            {"adversary_optimizer", adversary_optimizer == AdversaryOptimizer::kSgd ? "sgd" : "adam"},
            {"use_line_search", use_line_search},
            {"line_search_max", line_search_max},
            {"validation_fraction", validation_fraction},
            {"seed", seed}};
  }

  // Missing fields keep their defaults; unknown or mistyped fields raise a
  // ConfigError naming the field.
  static TrainConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    TrainConfig c;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      const nlohmann::json& v = it.value();
      auto number = [&]() {
        if (!v.is_number()) throw ConfigError("config field '" + key + "': expected a number");
        return v.get<double>();
      };
      auto count = [&]() -> std::size_t {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
          throw ConfigError("config field '" + key + "': expected a non-negative integer");
        }
        return v.get<std::size_t>();
      };
      auto text = [&]() {
        if (!v.is_string()) throw ConfigError("config field '" + key + "': expected a string");
        return v.get<std::string>();
      };
      if (key == "mode") {
        c.mode = parse_mode(text());
      } else if (key == "iterations") {
        c.iterations = count();
      } else if (key == "lambda") {
        c.lambda = number();
      } else if (key == "lambda_scaling") {
        const auto s = text();
        if (s == "dataset") {
          c.lambda_scaling = LambdaScaling::kDataset;
        } else if (s == "per_sample") {
          c.lambda_scaling = LambdaScaling::kPerSample;
        } else {
          throw ConfigError("config field 'lambda_scaling': expected 'dataset' or 'per_sample'");
        }
      } else if (key == "shrinkage") {
        c.shrinkage = number();
      } else if (key == "adversary_lr") {
        c.adversary_lr = number();
      } else if (key == "adversary_steps_per_iter") {
        c.adversary_steps_per_iter = count();
      } else if (key == "warmstart_iters") {
        c.warmstart_iters = count();
      } else if (key == "adversary_pretrain_epochs") {
        c.adversary_pretrain_epochs = count();
      } else if (key == "max_depth") {
        c.tree.max_depth = static_cast<int>(count());
      } else if (key == "min_samples_leaf") {
        c.tree.min_samples_leaf = count();
      } else if (key == "adversary_hidden") {
        if (!v.is_array()) throw ConfigError("config field 'adversary_hidden': expected an array");
        c.adversary_hidden.clear();
        for (const auto& h : v) {
          if (!h.is_number_integer() || h.get<std::int64_t>() <= 0) {
            throw ConfigError("config field 'adversary_hidden': expected positive integers");
          }
          c.adversary_hidden.push_back(h.get<std::size_t>());
        }
      } else if (key == "adversary_optimizer") {
        const auto s = text();
        if (s == "sgd") {
          c.adversary_optimizer = AdversaryOptimizer::kSgd;
        } else if (s == "adam") {
          c.adversary_optimizer = AdversaryOptimizer::kAdam;
        } else {
          throw ConfigError("config field 'adversary_optimizer': expected 'sgd' or 'adam'");
        }
      } else if (key == "use_line_search") {
        if (!v.is_boolean()) throw ConfigError("config field 'use_line_search': expected a boolean");
        c.use_line_search = v.get<bool>();
      } else if (key == "line_search_max") {
        c.line_search_max = number();
      } else if (key == "validation_fraction") {
        c.validation_fraction = number();
      } else if (key == "seed") {
        c.seed = count();
      } else {
        throw ConfigError("unknown config field '" + key + "'");
      }
    }
    c.validate();
    return c;
  }
};

// argmin_gamma sum_i L_F(y_i, gamma) in closed form, with the base rate
// clipped to [1/(2n), 1 - 1/(2n)] so single-class labels stay finite.
inline double init_f0(std::span<const int> labels) {
  if (labels.empty()) throw ArgumentError("init_f0 needs at least one label");
  const double n = static_cast<double>(labels.size());
  double positives = 0.0;
  for (int y : labels) positives += y;
  const double rate = std::clamp(positives / n, 1.0 / (2.0 * n), 1.0 - 1.0 / (2.0 * n));
  return std::log(rate / (1.0 - rate));
}

inline double predictor_loss(int y, double f) { return bernoulli_nll(y, f); }

// r_i = y_i - sigma(F_i).
inline std::vector<double> predictor_residuals(std::span<const int> y,
                                               std::span<const double> f) {
  if (y.size() != f.size()) throw ArgumentError("predictor_residuals: length mismatch");
  std::vector<double> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = static_cast<double>(y[i]) - sigmoid(f[i]);
  return r;
}

// Adversary batch for the current scores: v_i = (sigma(F_i)) or
// (sigma(F_i), y_i), target s_i.
inline AdversaryBatch adversary_batch(std::span<const double> f, std::span<const int> y,
                                      std::span<const int> s, FairnessMode mode) {
  if (f.size() != y.size() || f.size() != s.size()) {
    throw ArgumentError("adversary batch: length mismatch");
  }
  AdversaryBatch batch;
  batch.dim = adversary_input_dim(mode);
  batch.inputs.reserve(f.size() * batch.dim);
  batch.targets.assign(s.begin(), s.end());
  for (std::size_t i = 0; i < f.size(); ++i) {
    batch.inputs.push_back(sigmoid(f[i]));
    if (batch.dim == 2) batch.inputs.push_back(static_cast<double>(y[i]));
  }
  return batch;
}

// t_i = -dL_A/dF_i = -(dL_A/dv_i)[0] * sigma(F_i) * (1 - sigma(F_i)). The
// label coordinate of an equalized-odds input does not depend on F.
inline std::vector<double> adversary_residuals(const AdversaryNet& net,
                                               std::span<const double> f,
                                               std::span<const int> y,
                                               std::span<const int> s, FairnessMode mode) {
  if (mode == FairnessMode::kPlain || net.input_dim() != adversary_input_dim(mode)) {
    throw ConfigError("adversary input dimension " + std::to_string(net.input_dim()) +
                      " does not match mode '" + std::string(to_string(mode)) + "'");
  }
  if (f.size() != y.size() || f.size() != s.size()) {
    throw ArgumentError("adversary_residuals: length mismatch");
  }
  NetWorkspace ws(net);
  std::vector<double> t(f.size());
  double v[2];
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double p = sigmoid(f[i]);
    v[0] = p;
    v[1] = static_cast<double>(y[i]);
    const double logit = ws.forward(net, {v, net.input_dim()});
    ws.backward(net, nll_logit_derivative(s[i], logit), nullptr);
    t[i] = -ws.input_grad()[0] * p * (1.0 - p);
  }
  return t;
}

// u = r - lambda * t; lambda = 0 returns r unchanged.
inline std::vector<double> combine_residuals(std::span<const double> r,
                                             std::span<const double> t, double lambda) {
  if (r.size() != t.size()) throw ArgumentError("combine_residuals: length mismatch");
  if (!(lambda >= 0.0)) throw ArgumentError("combine_residuals: lambda must be >= 0");
  std::vector<double> u(r.begin(), r.end());
  if (lambda == 0.0) return u;
  for (std::size_t i = 0; i < u.size(); ++i) u[i] -= lambda * t[i];
  return u;
}

// Sum over rows of L_F(F + gamma h) - lambda * L_A(F + gamma h).
inline double stage_objective(double gamma, std::span<const double> f_prev,
                              std::span<const double> h, std::span<const int> y,
                              std::span<const int> s, const AdversaryNet* net, double lambda,
                              FairnessMode mode) {
  double total = 0.0;
  const bool adversarial = lambda != 0.0 && net != nullptr && mode != FairnessMode::kPlain;
  std::optional<NetWorkspace> ws;
  if (adversarial) ws.emplace(*net);
  double v[2];
  for (std::size_t i = 0; i < f_prev.size(); ++i) {
    const double f = f_prev[i] + gamma * h[i];
    total += predictor_loss(y[i], f);
    if (adversarial) {
      v[0] = sigmoid(f);
      v[1] = static_cast<double>(y[i]);
      total -= lambda * bernoulli_nll(s[i], ws->forward(*net, {v, net->input_dim()}));
    }
  }
  return total;
}

// Golden-section search for the stage weight on [0, gamma_max] to absolute
// tolerance 1e-4. Returns 0 for an all-zero stage.
inline double line_search_gamma(std::span<const double> f_prev, std::span<const double> h,
                                std::span<const int> y, std::span<const int> s,
                                const AdversaryNet* net, double lambda, FairnessMode mode,
                                double gamma_max = 10.0) {
  if (f_prev.empty()) throw ArgumentError("line_search_gamma: empty input");
  if (f_prev.size() != h.size() || h.size() != y.size() || y.size() != s.size()) {
    throw ArgumentError("line_search_gamma: length mismatch");
  }
  if (std::all_of(h.begin(), h.end(), [](double v) { return v == 0.0; })) return 0.0;
  auto g = [&](double gamma) {
    return stage_objective(gamma, f_prev, h, y, s, net, lambda, mode);
  };
  constexpr double kInvPhi = 0.6180339887498949;
  double a = 0.0;
  double b = gamma_max;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double gc = g(c);
  double gd = g(d);
  while (b - a > 1e-4) {
    if (gc <= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - kInvPhi * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + kInvPhi * (b - a);
      gd = g(d);
    }
  }
  double best = 0.5 * (a + b);
  double best_value = g(best);
  for (double edge : {0.0, gamma_max}) {
    const double value = g(edge);
    if (value < best_value) {
      best = edge;
      best_value = value;
    }
  }
  return best;
}

struct TraceRow {
  std::size_t iter = 0;
  double train_acc = 0.0;
  double val_acc = std::numeric_limits<double>::quiet_NaN();
  double train_prule = 0.0;
  double val_prule = std::numeric_limits<double>::quiet_NaN();
  double d_fpr = std::numeric_limits<double>::quiet_NaN();
  double d_fnr = std::numeric_limits<double>::quiet_NaN();
  double pred_loss = 0.0;
  double adv_loss = std::numeric_limits<double>::quiet_NaN();
};

struct TrainingTrace {
  std::vector<TraceRow> rows;

  void write_csv(std::ostream& out) const {
    out << "iter,train_acc,val_acc,train_prule,val_prule,d_fpr,d_fnr,pred_loss,adv_loss\n";
    for (const auto& r : rows) {
      out << r.iter << ',' << format_real(r.train_acc) << ',' << format_real(r.val_acc) << ','
          << format_real(r.train_prule) << ',' << format_real(r.val_prule) << ','
          << format_real(r.d_fpr) << ',' << format_real(r.d_fnr) << ','
          << format_real(r.pred_loss) << ',' << format_real(r.adv_loss) << '\n';
    }
  }
};

struct TrainResult {
  FagtbModel model;
  TrainingTrace trace;
  SplitIndices rows;  // training / validation rows of the input dataset
};

namespace detail {

inline double p_rule_or_nan(std::span<const int> preds, std::span<const int> s) {
  try {
    return p_rule(preds, s);
  } catch (const MetricError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

inline double mean_predictor_loss(std::span<const int> y, std::span<const double> f) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) total += predictor_loss(y[i], f[i]);
  return total / static_cast<double>(y.size());
}

// Adversary plus its optimizer state.
class AdversaryTrainer {
 public:
  AdversaryTrainer(const TrainConfig& config)
      : config_(config),
        net_(init_xavier(config.adversary_layers(), config.seed)) {
    if (config.adversary_optimizer == AdversaryOptimizer::kAdam) adam_.emplace(net_);
  }

  const AdversaryNet& net() const { return net_; }
  AdversaryNet& net() { return net_; }

  void fit(const AdversaryBatch& batch, std::size_t steps) {
    for (std::size_t k = 0; k < steps; ++k) {
      const NetParameters grad = param_gradients(net_, batch);
      if (adam_) {
        adam_->step(net_, grad, config_.adversary_lr);
      } else {
        sgd_step(net_, grad, config_.adversary_lr);
      }
    }
    if (!net_.all_finite()) throw TrainingError("adversary parameters became non-finite");
  }

 private:
  const TrainConfig& config_;
  AdversaryNet net_;
  std::optional<AdamOptimizer> adam_;
};

}  // namespace detail

inline TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  dataset.validate();
  config.validate();

  TrainResult result;
  if (config.validation_fraction > 0.0 && dataset.n >= 2) {
    result.rows = split_indices(dataset.n, config.validation_fraction, config.seed, "validation");
  } else {
    result.rows.train.resize(dataset.n);
    std::iota(result.rows.train.begin(), result.rows.train.end(), std::size_t{0});
  }
  const Dataset train_set = dataset.subset(result.rows.train);
  const Dataset val_set = dataset.subset(result.rows.test);
  const std::size_t n = train_set.n;
  const bool has_val = val_set.n > 0;
  const bool adversarial = config.mode != FairnessMode::kPlain;
  const double lambda_eff = config.lambda_scaling == LambdaScaling::kDataset
                                ? config.lambda * static_cast<double>(n)
                                : config.lambda;

  FagtbModel& model = result.model;
  model.mode = config.mode;
  model.feature_names = dataset.feature_names;
  model.config = config.to_json();
  model.f0 = init_f0(train_set.labels);

  std::vector<double> f(n, model.f0);
  std::vector<double> f_val(val_set.n, model.f0);
  std::optional<detail::AdversaryTrainer> adversary;
  if (adversarial) adversary.emplace(config);

  const TreeBuilder builder(train_set.features, n, train_set.p);
  std::vector<double> h(n);
  std::vector<double> t;

  for (std::size_t m = 0; m < config.iterations; ++m) {
    const bool penalized = adversarial && m >= config.warmstart_iters;
    const std::vector<double> r = predictor_residuals(train_set.labels, f);
    if (adversarial) {
      t = adversary_residuals(adversary->net(), f, train_set.labels, train_set.sensitive,
                              config.mode);
    } else {
      t.assign(n, 0.0);
    }
    const double lambda_m = penalized ? lambda_eff : 0.0;
    const std::vector<double> u = combine_residuals(r, t, lambda_m);

    RegressionTree tree = builder.fit(u, config.tree);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = tree.predict_unchecked(train_set.features.data() + i * train_set.p);
    }
    const double gamma =
        config.use_line_search
            ? line_search_gamma(f, h, train_set.labels, train_set.sensitive,
                                adversary ? &adversary->net() : nullptr, lambda_m, config.mode,
                                config.line_search_max)
            : config.shrinkage;
    for (std::size_t i = 0; i < n; ++i) f[i] += gamma * h[i];
    for (std::size_t i = 0; i < val_set.n; ++i) {
      f_val[i] += gamma * tree.predict_unchecked(val_set.features.data() + i * val_set.p);
    }
    model.stages.push_back({std::move(tree), gamma});

    TraceRow row;
    row.iter = m + 1;
    if (adversarial) {
      const AdversaryBatch batch =
          adversary_batch(f, train_set.labels, train_set.sensitive, config.mode);
      try {
        if (m + 1 == config.warmstart_iters) {
          adversary->fit(batch, config.adversary_pretrain_epochs);
        } else if (m + 1 > config.warmstart_iters) {
          adversary->fit(batch, config.adversary_steps_per_iter);
        }
      } catch (const TrainingError& e) {
        throw TrainingError("iteration " + std::to_string(m + 1) + ": " + e.what());
      }
      row.adv_loss = adversary_loss(adversary->net(), batch);
    }

    row.pred_loss = detail::mean_predictor_loss(train_set.labels, f);
    if (!std::isfinite(row.pred_loss)) {
      throw TrainingError("iteration " + std::to_string(m + 1) + ": non-finite predictor loss");
    }
    const auto preds = classify_scores(f);
    row.train_acc = accuracy(preds, train_set.labels);
    row.train_prule = detail::p_rule_or_nan(preds, train_set.sensitive);
    try {
      const auto dm = disparate_mistreatment(preds, train_set.labels, train_set.sensitive);
      row.d_fpr = dm.d_fpr;
      row.d_fnr = dm.d_fnr;
    } catch (const MetricError&) {
    }
    if (has_val) {
      const auto val_preds = classify_scores(f_val);
      row.val_acc = accuracy(val_preds, val_set.labels);
      row.val_prule = detail::p_rule_or_nan(val_preds, val_set.sensitive);
    }
    result.trace.rows.push_back(row);
  }
  if (adversary) model.adversary = adversary->net();
  return result;
}

}  // namespace fagtb

#endif  // FAGTB_TRAINER_HPP_

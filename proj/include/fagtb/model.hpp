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

#ifndef FAGTB_MODEL_HPP_
#define FAGTB_MODEL_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fagtb/adversary.hpp"
#include "fagtb/cart.hpp"
#include "fagtb/data.hpp"
#include "fagtb/errors.hpp"
#include "fagtb/numeric.hpp"
#include "json.hpp"

namespace fagtb {

enum class FairnessMode { kPlain, kDemographicParity, kEqualizedOdds };

inline std::string_view to_string(FairnessMode mode) {
  switch (mode) {
    case FairnessMode::kPlain: return "plain";
    case FairnessMode::kDemographicParity: return "demographic_parity";
    case FairnessMode::kEqualizedOdds: return "equalized_odds";
  }
  return "plain";
}

inline FairnessMode parse_mode(std::string_view s) {
  if (s == "plain") return FairnessMode::kPlain;
  if (s == "demographic_parity" || s == "dp") return FairnessMode::kDemographicParity;
  if (s == "equalized_odds" || s == "eo") return FairnessMode::kEqualizedOdds;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

// Adversary input width for a mode: sigma(F) alone, or (sigma(F), y).
inline std::size_t adversary_input_dim(FairnessMode mode) {
  return mode == FairnessMode::kEqualizedOdds ? 2 : 1;
}

struct Stage {
  RegressionTree tree;
  double gamma = 0.0;
};

// F(x) = f0 + sum_k gamma_k * h_k(x), summed stage by stage.
struct FagtbModel {
  FairnessMode mode = FairnessMode::kPlain;
  double f0 = 0.0;
  std::vector<Stage> stages;
  std::optional<AdversaryNet> adversary;
  std::vector<std::string> feature_names;
  nlohmann::json config = nlohmann::json::object();

  std::size_t num_features() const { return feature_names.size(); }

  // Raw score using only the first `num_stages` stages.
  double score(std::span<const double> x, std::size_t num_stages) const {
    if (x.size() != num_features()) {
      throw ArgumentError("model expects " + std::to_string(num_features()) +
                          " features, got " + std::to_string(x.size()));
    }
    double f = f0;
    const std::size_t m = std::min(num_stages, stages.size());
    for (std::size_t k = 0; k < m; ++k) {
      f += stages[k].gamma * stages[k].tree.predict_unchecked(x.data());
    }
    return f;
  }
  double score(std::span<const double> x) const { return score(x, stages.size()); }

  nlohmann::json to_json() const {
    nlohmann::json jstages = nlohmann::json::array();
    for (const auto& s : stages) {
      jstages.push_back({{"tree", s.tree.to_json()}, {"gamma", s.gamma}});
    }
    return {{"mode", std::string(to_string(mode))},
            {"f0", f0},
            {"stages", std::move(jstages)},
            {"adversary", adversary ? adversary->to_json() : nlohmann::json(nullptr)},
            {"config", config},
            {"feature_names", feature_names}};
  }

  static FagtbModel from_json(const nlohmann::json& j) {
    FagtbModel m;
    try {
      m.mode = parse_mode(j.at("mode").get<std::string>());
      m.f0 = j.at("f0").get<double>();
      m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
      for (const auto& js : j.at("stages")) {
        Stage s{RegressionTree::from_json(js.at("tree")), js.at("gamma").get<double>()};
        if (s.tree.num_features() != m.feature_names.size()) {
          throw DataError("stage tree feature count does not match feature_names");
        }
        m.stages.push_back(std::move(s));
      }
      if (j.contains("adversary") && !j["adversary"].is_null()) {
        m.adversary = AdversaryNet::from_json(j["adversary"]);
      }
      m.config = j.value("config", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed model file: ") + e.what());
    }
    return m;
  }
};

inline void check_features(const FagtbModel& model, const Dataset& ds) {
  if (ds.p != model.num_features()) {
    throw ArgumentError("model expects " + std::to_string(model.num_features()) +
                        " features, dataset has " + std::to_string(ds.p));
  }
}

inline std::vector<double> predict_scores(const FagtbModel& model, const Dataset& ds) {
  check_features(model, ds);
  std::vector<double> f(ds.n, model.f0);
  for (const auto& stage : model.stages) {
    for (std::size_t i = 0; i < ds.n; ++i) {
      f[i] += stage.gamma * stage.tree.predict_unchecked(ds.features.data() + i * ds.p);
    }
  }
  return f;
}

inline std::vector<double> predict_proba(const FagtbModel& model, const Dataset& ds) {
  auto f = predict_scores(model, ds);
  for (double& v : f) v = sigmoid(v);
  return f;
}

// 1 exactly when sigma(F) > 0.5, i.e. F > 0.
inline std::vector<int> classify_scores(std::span<const double> scores) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > 0.0 ? 1 : 0;
  return out;
}

inline std::vector<int> classify(const FagtbModel& model, const Dataset& ds) {
  return classify_scores(predict_scores(model, ds));
}

}  // namespace fagtb

#endif  // FAGTB_MODEL_HPP_

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

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fagtb/errors.hpp"
#include "fagtb/metrics.hpp"
#include "fagtb/synthetic.hpp"
#include "fagtb/trainer.hpp"

namespace fagtb {
namespace {

using Vec = std::vector<int>;

// P(pred = 1 | condition) by counting; nullopt for an empty condition.
std::optional<double> frequency(const Vec& preds, const std::function<bool(std::size_t)>& cond) {
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!cond(i)) continue;
    ++total;
    hits += preds[i] == 1;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(total);
}

struct Instance {
  Vec preds, labels, s;
};

// Checks every metric against conditional-frequency counting.
void check_instance(const Instance& in) {
  const auto& [preds, labels, s] = in;
  const auto r0 = frequency(preds, [&](std::size_t i) { return s[i] == 0; });
  const auto r1 = frequency(preds, [&](std::size_t i) { return s[i] == 1; });
  std::size_t agree = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) agree += preds[i] == labels[i];
  EXPECT_DOUBLE_EQ(accuracy(preds, labels),
                   static_cast<double>(agree) / static_cast<double>(preds.size()));

  if (!r0 || !r1) {
    EXPECT_THROW(p_rule(preds, s), MetricError);
    EXPECT_THROW(disparate_impact(preds, s), MetricError);
    EXPECT_THROW(disparate_mistreatment(preds, labels, s), MetricError);
    return;
  }
  double expected_rule;
  if (*r0 == 0.0 && *r1 == 0.0) {
    expected_rule = 1.0;
  } else if (*r0 == 0.0 || *r1 == 0.0) {
    expected_rule = 0.0;
  } else {
    expected_rule = std::min(*r0 / *r1, *r1 / *r0);
  }
  EXPECT_DOUBLE_EQ(p_rule(preds, s), expected_rule);
  EXPECT_DOUBLE_EQ(disparate_impact(preds, s), std::abs(*r1 - *r0));

  const auto fpr0 = frequency(preds, [&](std::size_t i) { return s[i] == 0 && labels[i] == 0; });
  const auto fpr1 = frequency(preds, [&](std::size_t i) { return s[i] == 1 && labels[i] == 0; });
  const auto tpr0 = frequency(preds, [&](std::size_t i) { return s[i] == 0 && labels[i] == 1; });
  const auto tpr1 = frequency(preds, [&](std::size_t i) { return s[i] == 1 && labels[i] == 1; });
  if (!fpr0 || !fpr1 || !tpr0 || !tpr1) {
    EXPECT_THROW(disparate_mistreatment(preds, labels, s), MetricError);
    const auto report = fairness_report(preds, labels, s);
    EXPECT_TRUE(std::isnan(report.d_fpr));
    EXPECT_TRUE(std::isnan(report.d_fnr));
    return;
  }
  const auto dm = disparate_mistreatment(preds, labels, s);
  EXPECT_NEAR(dm.d_fpr, std::abs(*fpr1 - *fpr0), 1e-15);
  EXPECT_NEAR(dm.d_fnr, std::abs((1.0 - *tpr1) - (1.0 - *tpr0)), 1e-15);

  const auto report = fairness_report(preds, labels, s);
  EXPECT_EQ(report.p_rule, p_rule(preds, s));
  EXPECT_EQ(report.d_fpr, dm.d_fpr);
  EXPECT_EQ(report.group_positive_rates[0], *r0);
  EXPECT_EQ(report.group_positive_rates[1], *r1);
}

Instance decode(std::size_t n, std::uint64_t bits) {
  Instance in;
  for (std::size_t i = 0; i < n; ++i) {
    in.preds.push_back(static_cast<int>((bits >> i) & 1));
    in.labels.push_back(static_cast<int>((bits >> (n + i)) & 1));
    in.s.push_back(static_cast<int>((bits >> (2 * n + i)) & 1));
  }
  return in;
}

TEST(MetricsOracle, ExhaustiveUpToFourRows) {
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::uint64_t bits = 0; bits < (1ULL << (3 * n)); ++bits) check_instance(decode(n, bits));
  }
}

TEST(MetricsOracle, SampledFiveToEightRows) {
  std::mt19937_64 rng(31);
  for (std::size_t n = 5; n <= 8; ++n) {
    std::uniform_int_distribution<std::uint64_t> dist(0, (1ULL << (3 * n)) - 1);
    for (int k = 0; k < 1500; ++k) check_instance(decode(n, dist(rng)));
  }
}

TEST(PRule, Examples) {
  EXPECT_EQ(p_rule(Vec{1, 0, 1, 0}, Vec{1, 1, 0, 0}), 1.0);
  EXPECT_EQ(p_rule(Vec{1, 1, 1, 0}, Vec{1, 1, 0, 0}), 0.5);
  EXPECT_EQ(p_rule(Vec{0, 0, 1, 0}, Vec{1, 1, 0, 0}), 0.0);
  EXPECT_EQ(p_rule(Vec{0, 0, 0, 0}, Vec{1, 1, 0, 0}), 1.0);
  EXPECT_THROW(p_rule(Vec{1, 0}, Vec{1, 1}), MetricError);
}

TEST(DisparateImpact, Examples) {
  EXPECT_EQ(disparate_impact(Vec{1, 0, 1, 0}, Vec{1, 1, 0, 0}), 0.0);
  EXPECT_EQ(disparate_impact(Vec{1, 1, 1, 0}, Vec{1, 1, 0, 0}), 0.5);
  EXPECT_EQ(disparate_impact(Vec{1, 1, 1, 1}, Vec{1, 0, 0, 1}), 0.0);
}

TEST(DisparateMistreatment, Examples) {
  const Vec labels{0, 0, 1, 1};
  const Vec s{1, 0, 1, 0};
  const auto perfect = disparate_mistreatment(labels, labels, s);
  EXPECT_EQ(perfect.d_fpr, 0.0);
  EXPECT_EQ(perfect.d_fnr, 0.0);
  const auto dm = disparate_mistreatment(Vec{1, 0, 1, 1}, labels, s);
  EXPECT_EQ(dm.d_fpr, 1.0);
  EXPECT_EQ(dm.d_fnr, 0.0);
  const auto swapped = disparate_mistreatment(Vec{1, 0, 1, 1}, labels, Vec{0, 1, 0, 1});
  EXPECT_EQ(swapped.d_fpr, dm.d_fpr);
  EXPECT_EQ(swapped.d_fnr, dm.d_fnr);
}

TEST(DisparateMistreatment, EmptyCellIsNamed) {
  try {
    disparate_mistreatment(Vec{1, 0, 1}, Vec{0, 0, 1}, Vec{1, 0, 1});
    FAIL();
  } catch (const MetricError& e) {
    EXPECT_NE(std::string(e.what()).find("s=0, y=1"), std::string::npos) << e.what();
  }
}

TEST(Accuracy, Examples) {
  EXPECT_EQ(accuracy(Vec{1, 0, 1}, Vec{1, 0, 1}), 1.0);
  EXPECT_EQ(accuracy(Vec{0, 1, 0}, Vec{1, 0, 1}), 0.0);
  EXPECT_EQ(accuracy(Vec{1, 0, 0, 1}, Vec{1, 1, 0, 0}), 0.5);
  EXPECT_THROW(accuracy(Vec{}, Vec{}), MetricError);
  EXPECT_THROW(accuracy(Vec{1}, Vec{1, 0}), MetricError);
}

TEST(MetricProperties, RelabelingSensitiveIsInvariant) {
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 200; ++trial) {
    Vec preds(20), s(20);
    for (int i = 0; i < 20; ++i) {
      preds[i] = coin(rng);
      s[i] = i % 2 == 0 ? 0 : coin(rng);
    }
    s[1] = 1;
    Vec flipped(s);
    for (int& v : flipped) v = 1 - v;
    EXPECT_EQ(p_rule(preds, s), p_rule(preds, flipped));
    EXPECT_EQ(disparate_impact(preds, s), disparate_impact(preds, flipped));
    EXPECT_EQ(p_rule(preds, s) == 1.0, disparate_impact(preds, s) == 0.0);
  }
}

TEST(FairnessReport, JsonUsesNullForUndefinedRates) {
  const auto report = fairness_report(Vec{1, 0}, Vec{1, 1}, Vec{0, 1});
  const auto j = report.to_json();
  EXPECT_TRUE(j.at("d_fpr").is_null());
  EXPECT_TRUE(j.at("d_fnr").is_null());
  EXPECT_EQ(j.at("p_rule").get<double>(), 0.0);
  EXPECT_EQ(j.at("group_sizes")[0].get<int>(), 1);
}

FagtbModel single_split_model() {
  // Splits on feature 1 only.
  FagtbModel m;
  m.feature_names = {"a", "b"};
  m.f0 = -0.1;
  std::vector<TreeNode> nodes(3);
  nodes[0].feature = 1;
  nodes[0].threshold = 0.5;
  nodes[0].left = 1;
  nodes[0].right = 2;
  nodes[1].value = -1.0;
  nodes[2].value = 1.0;
  m.stages.push_back({RegressionTree(2, {1, 1}, nodes), 1.0});
  return m;
}

Dataset two_feature_data(std::size_t n, std::uint64_t seed, bool constant_a) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  Dataset ds;
  ds.n = n;
  ds.p = 2;
  ds.feature_names = {"a", "b"};
  for (std::size_t i = 0; i < n; ++i) {
    ds.features.push_back(constant_a ? 2.0 : static_cast<double>(coin(rng)));
    ds.features.push_back(static_cast<double>(coin(rng)));
    ds.sensitive.push_back(coin(rng));
    ds.labels.push_back(coin(rng) ? static_cast<int>(ds.features.back()) : coin(rng));
  }
  return ds;
}

TEST(PermutationImportance, UnusedFeatureScoresExactlyZero) {
  const auto model = single_split_model();
  const auto ds = two_feature_data(500, 1, false);
  EXPECT_EQ(permutation_importance(model, ds, 0, 10, 3), 0.0);
  EXPECT_GT(permutation_importance(model, ds, 1, 10, 3), 0.1);
}

TEST(PermutationImportance, ConstantColumnScoresExactlyZero) {
  auto model = single_split_model();
  model.stages[0].tree = RegressionTree(2, {1, 1}, [] {
    std::vector<TreeNode> nodes(3);
    nodes[0].feature = 0;
    nodes[0].threshold = 1.5;
    nodes[0].left = 1;
    nodes[0].right = 2;
    nodes[1].value = -1.0;
    nodes[2].value = 1.0;
    return nodes;
  }());
  EXPECT_EQ(permutation_importance(model, two_feature_data(200, 2, true), 0, 5, 1), 0.0);
}

TEST(PermutationImportance, SeededAndValidated) {
  const auto model = single_split_model();
  const auto ds = two_feature_data(300, 3, false);
  EXPECT_EQ(permutation_importance(model, ds, 1, 4, 9), permutation_importance(model, ds, 1, 4, 9));
  EXPECT_THROW(permutation_importance(model, ds, 2, 4, 9), ArgumentError);
  EXPECT_THROW(permutation_importance(model, ds, 0, 0, 9), ArgumentError);
}

TEST(Histograms, InterceptOnlyPutsAllMassInOneBin) {
  FagtbModel m;
  m.feature_names = {"a", "b"};
  m.f0 = std::log(3.0);  // proba 0.75
  const auto h = group_score_histograms(m, two_feature_data(100, 4, false), 10);
  ASSERT_EQ(h.bins(), 10u);
  for (std::size_t b = 0; b < 10; ++b) {
    EXPECT_EQ(h.mass[0][b], b == 7 ? 1.0 : 0.0);
    EXPECT_EQ(h.mass[1][b], b == 7 ? 1.0 : 0.0);
  }
  EXPECT_EQ(h.l1_distance(), 0.0);
}

TEST(Histograms, MassesSumToOneAndEdgesCoverUnitInterval) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> proba(1000);
  Vec s(1000);
  for (std::size_t i = 0; i < proba.size(); ++i) {
    proba[i] = unit(rng);
    s[i] = static_cast<int>(i % 3 == 0);
  }
  proba[0] = 1.0;
  proba[1] = 0.0;
  const auto h = histograms_from_proba(proba, s, 7);
  EXPECT_EQ(h.edges.front(), 0.0);
  EXPECT_EQ(h.edges.back(), 1.0);
  for (int g = 0; g < 2; ++g) {
    EXPECT_NEAR(std::accumulate(h.mass[g].begin(), h.mass[g].end(), 0.0), 1.0, 1e-9);
  }
  std::ostringstream out;
  h.write_csv(out);
  EXPECT_EQ(out.str().rfind("bin_left,bin_right,mass_s0,mass_s1\n", 0), 0u);
  EXPECT_THROW(histograms_from_proba(proba, s, 1), ArgumentError);
  EXPECT_THROW(histograms_from_proba(proba, Vec(1000, 0), 5), MetricError);
}

TrainConfig preset(const std::string& name) {
  std::ifstream in(std::string(FAGTB_SOURCE_DIR) + "/configs/" + name);
  return TrainConfig::from_json(nlohmann::json::parse(in));
}

class SyntheticModels : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const Dataset ds = synthetic::generate(10000, 1).data;
    auto [train_set, test_set] = train_test_split(ds, 0.2, 1);
    test_ = new Dataset(std::move(test_set));
    unfair_ = new FagtbModel(train(train_set, preset("synthetic_plain.json")).model);
    auto fair = preset("synthetic_dp.json");
    fair.lambda = 0.015;
    fair_ = new FagtbModel(train(train_set, fair).model);
  }
  static void TearDownTestSuite() {
    delete test_;
    delete unfair_;
    delete fair_;
  }
  static Dataset* test_;
  static FagtbModel* unfair_;
  static FagtbModel* fair_;
};

Dataset* SyntheticModels::test_ = nullptr;
FagtbModel* SyntheticModels::unfair_ = nullptr;
FagtbModel* SyntheticModels::fair_ = nullptr;

TEST_F(SyntheticModels, FairModelDistributionsAreCloser) {
  const double fair = group_score_histograms(*fair_, *test_, 10).l1_distance();
  const double unfair = group_score_histograms(*unfair_, *test_, 10).l1_distance();
  EXPECT_LT(fair, unfair);
}

TEST_F(SyntheticModels, ColorLosesImportanceInTheFairModel) {
  const double color_unfair = permutation_importance(*unfair_, *test_, 0, 10, 1);
  const double age_unfair = permutation_importance(*unfair_, *test_, 1, 10, 1);
  const double color_fair = permutation_importance(*fair_, *test_, 0, 10, 1);
  const double age_fair = permutation_importance(*fair_, *test_, 1, 10, 1);
  EXPECT_LT(std::abs(color_fair), 0.02);
  EXPECT_LT(color_fair, color_unfair);
  const double widening = (age_fair - color_fair) - (age_unfair - color_unfair);
  EXPECT_NEAR(widening, 0.145, 0.08);
}

}  // namespace
}  // namespace fagtb

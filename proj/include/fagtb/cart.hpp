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

// Greedy binary regression trees (CART, squared error) used as the weak
// learner of the booster.
//
// Splits are searched exhaustively over every feature; candidate thresholds
// are midpoints between consecutive distinct sorted values, and rows with
// x[feature] <= threshold go left. Among equal-gain candidates the lowest
// feature index wins, then the lowest threshold. Growth is level-wise over a
// per-feature presorted row order, so fitting many trees on the same feature
// matrix (one per boosting stage) sorts only once.

#ifndef FAGTB_CART_HPP_
#define FAGTB_CART_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fagtb/errors.hpp"
#include "json.hpp"

namespace fagtb {

struct TreeParams {
  int max_depth = 3;
  std::size_t min_samples_leaf = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf prediction
  std::size_t samples = 0;

  bool is_leaf() const { return feature < 0; }
};

class RegressionTree {
 public:
  RegressionTree() = default;
  RegressionTree(std::size_t num_features, TreeParams params,
                 std::vector<TreeNode> nodes)
      : num_features_(num_features), params_(params), nodes_(std::move(nodes)) {}

  static RegressionTree leaf(std::size_t num_features, double value) {
    TreeNode node;
    node.value = value;
    return RegressionTree(num_features, TreeParams{0, 1}, {node});
  }

  double predict(std::span<const double> x) const {
    if (x.size() != num_features_) {
      throw ArgumentError("tree expects " + std::to_string(num_features_) +
                          " features, got " + std::to_string(x.size()));
    }
    return predict_unchecked(x.data());
  }

  double predict_unchecked(const double* x) const {
    int k = 0;
    while (!nodes_[k].is_leaf()) {
      const TreeNode& node = nodes_[k];
      k = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes_[k].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t num_features() const { return num_features_; }
  const TreeParams& params() const { return params_; }

  int depth() const { return nodes_.empty() ? 0 : depth_from(0); }

  bool uses_feature(std::size_t j) const {
    return std::any_of(nodes_.begin(), nodes_.end(), [&](const TreeNode& n) {
      return !n.is_leaf() && static_cast<std::size_t>(n.feature) == j;
    });
  }

  nlohmann::json to_json() const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : nodes_) {
      if (n.is_leaf()) {
        nodes.push_back({{"value", n.value}, {"samples", n.samples}});
      } else {
        nodes.push_back({{"feature", n.feature},
                         {"threshold", n.threshold},
                         {"left", n.left},
                         {"right", n.right},
                         {"samples", n.samples}});
      }
    }
    return {{"num_features", num_features_},
            {"max_depth", params_.max_depth},
            {"min_samples_leaf", params_.min_samples_leaf},
            {"nodes", std::move(nodes)}};
  }

  static RegressionTree from_json(const nlohmann::json& j) {
    std::vector<TreeNode> nodes;
    const auto p = j.at("num_features").get<std::size_t>();
    for (const auto& jn : j.at("nodes")) {
      TreeNode n;
      n.samples = jn.value("samples", std::size_t{0});
      if (jn.contains("feature")) {
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
      } else {
        n.value = jn.at("value").get<double>();
      }
      nodes.push_back(n);
    }
    const int count = static_cast<int>(nodes.size());
    if (count == 0) throw DataError("tree has no nodes");
    for (const auto& n : nodes) {
      if (!n.is_leaf() &&
          (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count ||
           static_cast<std::size_t>(n.feature) >= p)) {
        throw DataError("malformed tree node");
      }
    }
    return RegressionTree(p,
                          TreeParams{j.at("max_depth").get<int>(),
                                     j.at("min_samples_leaf").get<std::size_t>()},
                          std::move(nodes));
  }

 private:
  int depth_from(int k) const {
    const TreeNode& n = nodes_[k];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }

  std::size_t num_features_ = 0;
  TreeParams params_;
  std::vector<TreeNode> nodes_;
};

// Fits trees to arbitrary targets over a fixed row-major feature matrix.
// The matrix must outlive the builder.
class TreeBuilder {
 public:
  TreeBuilder(std::span<const double> features, std::size_t n, std::size_t p)
      : x_(features), n_(n), p_(p), order_(p) {
    if (n == 0 || p == 0) throw ArgumentError("tree fitting needs n >= 1, p >= 1");
    if (features.size() != n * p) throw ArgumentError("feature matrix size mismatch");
    for (std::size_t j = 0; j < p; ++j) {
      auto& ord = order_[j];
      ord.resize(n);
      std::iota(ord.begin(), ord.end(), std::uint32_t{0});
      std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
        return x_[a * p_ + j] < x_[b * p_ + j];
      });
    }
  }

  RegressionTree fit(std::span<const double> targets, const TreeParams& params) const {
    if (targets.size() != n_) throw ArgumentError("targets length must equal n");
    if (params.max_depth < 0) throw ArgumentError("max_depth must be >= 0");
    if (params.min_samples_leaf < 1) throw ArgumentError("min_samples_leaf must be >= 1");
    for (double t : targets) {
      if (!std::isfinite(t)) throw ArgumentError("tree targets must be finite");
    }

    std::vector<TreeNode> nodes(1);
    // Rows still in an open node point at its frontier slot; -1 otherwise.
    std::vector<int> slot(n_, 0);
    std::vector<int> frontier{0};

    for (int depth = 0; !frontier.empty(); ++depth) {
      const std::size_t width = frontier.size();
      std::vector<Stats> stats(width);
      for (std::size_t i = 0; i < n_; ++i) {
        if (slot[i] >= 0) stats[slot[i]].add(targets[i]);
      }
      std::vector<Candidate> best(width);
      std::vector<char> open(width, 0);
      bool any_open = false;
      for (std::size_t k = 0; k < width; ++k) {
        nodes[frontier[k]].samples = stats[k].count;
        open[k] = depth < params.max_depth && stats[k].min < stats[k].max &&
                  stats[k].count >= 2 * params.min_samples_leaf;
        any_open = any_open || open[k];
      }
      if (any_open) search(targets, params, stats, open, best, slot);

      std::vector<int> next;
      std::vector<int> remap(width, -1);  // slot -> first child slot
      for (std::size_t k = 0; k < width; ++k) {
        TreeNode& node = nodes[frontier[k]];
        const double parent_score = stats[k].sum * stats[k].sum / stats[k].count;
        const double sse = stats[k].sumsq - parent_score;
        if (open[k] && best[k].feature >= 0 &&
            best[k].score - parent_score > 1e-12 * std::max(sse, 0.0)) {
          node.feature = best[k].feature;
          node.threshold = best[k].threshold;
          const int left = static_cast<int>(nodes.size());
          node.left = left;
          node.right = left + 1;
          remap[k] = static_cast<int>(next.size());
          next.push_back(left);
          next.push_back(left + 1);
          nodes.emplace_back();  // invalidates `node`
          nodes.emplace_back();
        } else {
          node.value = stats[k].count > 0 ? stats[k].sum / static_cast<double>(stats[k].count) : 0.0;
        }
      }
      for (std::size_t i = 0; i < n_; ++i) {
        if (slot[i] < 0) continue;
        const int k = slot[i];
        if (remap[k] < 0) {
          slot[i] = -1;
        } else {
          const TreeNode& node = nodes[frontier[k]];
          slot[i] = remap[k] + (x_[i * p_ + node.feature] <= node.threshold ? 0 : 1);
        }
      }
      frontier = std::move(next);
    }
    return RegressionTree(p_, params, std::move(nodes));
  }

  std::size_t n() const { return n_; }
  std::size_t p() const { return p_; }

 private:
  struct Stats {
    std::size_t count = 0;
    double sum = 0.0;
    double sumsq = 0.0;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    void add(double t) {
      ++count;
      sum += t;
      sumsq += t * t;
      min = std::min(min, t);
      max = std::max(max, t);
    }
  };

  struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    double score = -std::numeric_limits<double>::infinity();
  };

  // Maximizes sum_l^2 / n_l + sum_r^2 / n_r, which is equivalent to
  // minimizing the summed squared error of the two children.
  void search(std::span<const double> targets, const TreeParams& params,
              const std::vector<Stats>& stats, const std::vector<char>& open,
              std::vector<Candidate>& best, const std::vector<int>& slot) const {
    const std::size_t width = stats.size();
    std::vector<std::size_t> left_count(width);
    std::vector<double> left_sum(width);
    std::vector<double> last(width);
    for (std::size_t j = 0; j < p_; ++j) {
      std::fill(left_count.begin(), left_count.end(), 0);
      std::fill(left_sum.begin(), left_sum.end(), 0.0);
      for (std::uint32_t i : order_[j]) {
        const int k = slot[i];
        if (k < 0 || !open[k]) continue;
        const double x = x_[i * p_ + j];
        const std::size_t nl = left_count[k];
        if (nl > 0 && x > last[k]) {
          const std::size_t nr = stats[k].count - nl;
          if (nl >= params.min_samples_leaf && nr >= params.min_samples_leaf) {
            const double sl = left_sum[k];
            const double sr = stats[k].sum - sl;
            const double score = sl * sl / static_cast<double>(nl) +
                                 sr * sr / static_cast<double>(nr);
            if (score > best[k].score) {
              double mid = last[k] + (x - last[k]) / 2.0;
              if (!(mid < x)) mid = last[k];
              best[k] = {static_cast<int>(j), mid, score};
            }
          }
        }
        left_count[k] = nl + 1;
        left_sum[k] += targets[i];
        last[k] = x;
      }
    }
  }

  std::span<const double> x_;
  std::size_t n_;
  std::size_t p_;
  std::vector<std::vector<std::uint32_t>> order_;
};

inline RegressionTree fit_tree(std::span<const double> features, std::size_t n,
                               std::size_t p, std::span<const double> targets,
                               const TreeParams& params) {
  if (n == 0) throw ArgumentError("fit_tree: empty input");
  return TreeBuilder(features, n, p).fit(targets, params);
}

inline double predict_tree(const RegressionTree& tree, std::span<const double> x) {
  return tree.predict(x);
}

}  // namespace fagtb

#endif  // FAGTB_CART_HPP_

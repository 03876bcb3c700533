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

// Group fairness and accuracy on hard 0/1 predictions, permutation feature
// importance and per-group score histograms.

#ifndef FAGTB_METRICS_HPP_
#define FAGTB_METRICS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fagtb/data.hpp"
#include "fagtb/errors.hpp"
#include "fagtb/model.hpp"
#include "json.hpp"

namespace fagtb {

namespace detail {

inline void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw MetricError("metric inputs have different lengths");
  if (a == 0) throw MetricError("metric inputs are empty");
}

// P(pred = 1 | s = g) for g in {0, 1}.
inline std::array<double, 2> positive_rates(std::span<const int> preds,
                                            std::span<const int> s) {
  check_lengths(preds.size(), s.size());
  std::array<double, 2> pos{0.0, 0.0};
  std::array<double, 2> cnt{0.0, 0.0};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    cnt[s[i]] += 1.0;
    pos[s[i]] += preds[i];
  }
  for (int g = 0; g < 2; ++g) {
    if (cnt[g] == 0.0) {
      throw MetricError("sensitive group s=" + std::to_string(g) + " is empty");
    }
  }
  return {pos[0] / cnt[0], pos[1] / cnt[1]};
}

}  // namespace detail

// min(r1/r0, r0/r1); both rates 0 gives 1, exactly one rate 0 gives 0.
inline double p_rule(std::span<const int> preds, std::span<const int> s) {
  const auto r = detail::positive_rates(preds, s);
  if (r[0] == 0.0 && r[1] == 0.0) return 1.0;
  if (r[0] == 0.0 || r[1] == 0.0) return 0.0;
  return std::min(r[1] / r[0], r[0] / r[1]);
}

inline double disparate_impact(std::span<const int> preds, std::span<const int> s) {
  const auto r = detail::positive_rates(preds, s);
  return std::abs(r[1] - r[0]);
}

struct Mistreatment {
  double d_fpr = 0.0;
  double d_fnr = 0.0;
};

inline Mistreatment disparate_mistreatment(std::span<const int> preds,
                                           std::span<const int> labels,
                                           std::span<const int> s) {
  detail::check_lengths(preds.size(), labels.size());
  detail::check_lengths(preds.size(), s.size());
  // [s][y] counts of rows and of positive predictions.
  double cnt[2][2] = {{0, 0}, {0, 0}};
  double pos[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < preds.size(); ++i) {
    cnt[s[i]][labels[i]] += 1.0;
    pos[s[i]][labels[i]] += preds[i];
  }
  for (int g = 0; g < 2; ++g) {
    for (int y = 0; y < 2; ++y) {
      if (cnt[g][y] == 0.0) {
        throw MetricError("empty cell s=" + std::to_string(g) +
                          ", y=" + std::to_string(y));
      }
    }
  }
  const double fpr1 = pos[1][0] / cnt[1][0];
  const double fpr0 = pos[0][0] / cnt[0][0];
  const double fnr1 = 1.0 - pos[1][1] / cnt[1][1];
  const double fnr0 = 1.0 - pos[0][1] / cnt[0][1];
  return {std::abs(fpr1 - fpr0), std::abs(fnr1 - fnr0)};
}

inline double accuracy(std::span<const int> preds, std::span<const int> labels) {
  detail::check_lengths(preds.size(), labels.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

struct FairnessReport {
  double accuracy = 0.0;
  double p_rule = 0.0;
  double disparate_impact = 0.0;
  // NaN when a required (s, y) cell is empty.
  double d_fpr = std::numeric_limits<double>::quiet_NaN();
  double d_fnr = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 2> group_positive_rates{0.0, 0.0};
  std::array<std::size_t, 2> group_sizes{0, 0};

  nlohmann::json to_json() const {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"accuracy", accuracy},
            {"p_rule", p_rule},
            {"disparate_impact", disparate_impact},
            {"d_fpr", num(d_fpr)},
            {"d_fnr", num(d_fnr)},
            {"group_positive_rates", {group_positive_rates[0], group_positive_rates[1]}},
            {"group_sizes", {group_sizes[0], group_sizes[1]}}};
  }
};

// Demographic-parity statistics need both sensitive groups; the equalized
// odds pair is left NaN instead of throwing when a (s, y) cell is empty.
inline FairnessReport fairness_report(std::span<const int> preds,
                                      std::span<const int> labels,
                                      std::span<const int> s) {
  FairnessReport r;
  r.accuracy = accuracy(preds, labels);
  r.p_rule = p_rule(preds, s);
  r.disparate_impact = disparate_impact(preds, s);
  r.group_positive_rates = detail::positive_rates(preds, s);
  for (int g : s) ++r.group_sizes[g];
  try {
    const auto dm = disparate_mistreatment(preds, labels, s);
    r.d_fpr = dm.d_fpr;
    r.d_fnr = dm.d_fnr;
  } catch (const MetricError&) {
  }
  return r;
}

inline FairnessReport evaluate(const FagtbModel& model, const Dataset& ds) {
  const auto preds = classify(model, ds);
  return fairness_report(preds, ds.labels, ds.sensitive);
}

// Mean accuracy drop over `n_repeats` seeded shuffles of one feature column.
inline double permutation_importance(const FagtbModel& model, const Dataset& ds,
                                     std::size_t feature_index, std::size_t n_repeats,
                                     std::uint64_t seed) {
  if (feature_index >= ds.p) {
    throw ArgumentError("feature index " + std::to_string(feature_index) +
                        " out of range (p = " + std::to_string(ds.p) + ")");
  }
  if (n_repeats == 0) throw ArgumentError("n_repeats must be >= 1");
  check_features(model, ds);
  const double baseline = accuracy(classify(model, ds), ds.labels);
  auto rng = make_stream(seed + feature_index, "shuffle");
  Dataset shuffled = ds;
  std::vector<double> column(ds.n);
  for (std::size_t i = 0; i < ds.n; ++i) column[i] = ds.at(i, feature_index);
  double total = 0.0;
  for (std::size_t r = 0; r < n_repeats; ++r) {
    std::shuffle(column.begin(), column.end(), rng);
    for (std::size_t i = 0; i < ds.n; ++i) shuffled.features[i * ds.p + feature_index] = column[i];
    total += baseline - accuracy(classify(model, shuffled), ds.labels);
  }
  return total / static_cast<double>(n_repeats);
}

struct GroupHistograms {
  std::vector<double> edges;  // n_bins + 1 edges over [0, 1]
  std::array<std::vector<double>, 2> mass;

  std::size_t bins() const { return edges.size() - 1; }

  double l1_distance() const {
    double d = 0.0;
    for (std::size_t b = 0; b < bins(); ++b) d += std::abs(mass[0][b] - mass[1][b]);
    return d;
  }

  void write_csv(std::ostream& out) const {
    out << "bin_left,bin_right,mass_s0,mass_s1\n";
    for (std::size_t b = 0; b < bins(); ++b) {
      out << format_real(edges[b]) << ',' << format_real(edges[b + 1]) << ','
          << format_real(mass[0][b]) << ',' << format_real(mass[1][b]) << '\n';
    }
  }
};

// Bins are [k/n, (k+1)/n) with the last one closed at 1.
inline GroupHistograms histograms_from_proba(std::span<const double> proba,
                                             std::span<const int> s, std::size_t n_bins) {
  if (n_bins < 2) throw ArgumentError("n_bins must be >= 2");
  detail::check_lengths(proba.size(), s.size());
  GroupHistograms h;
  h.edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) {
    h.edges[b] = static_cast<double>(b) / static_cast<double>(n_bins);
  }
  h.mass[0].assign(n_bins, 0.0);
  h.mass[1].assign(n_bins, 0.0);
  std::array<double, 2> count{0.0, 0.0};
  for (std::size_t i = 0; i < proba.size(); ++i) {
    auto b = static_cast<std::size_t>(proba[i] * static_cast<double>(n_bins));
    b = std::min(b, n_bins - 1);
    h.mass[s[i]][b] += 1.0;
    count[s[i]] += 1.0;
  }
  for (int g = 0; g < 2; ++g) {
    if (count[g] == 0.0) throw MetricError("sensitive group s=" + std::to_string(g) + " is empty");
    for (double& m : h.mass[g]) m /= count[g];
  }
  return h;
}

inline GroupHistograms group_score_histograms(const FagtbModel& model, const Dataset& ds,
                                              std::size_t n_bins) {
  const auto proba = predict_proba(model, ds);
  return histograms_from_proba(proba, ds.sensitive, n_bins);
}

}  // namespace fagtb

#endif  // FAGTB_METRICS_HPP_

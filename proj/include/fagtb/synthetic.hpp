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

// Car-insurance toy scenario: the claim depends only on two latent traits
// (aggressiveness, inattention) that are independent of gender, yet the car
// color proxy mixes aggressiveness with gender.
//
//   s ~ U{0,1}
//   (I, a) ~ N((0, 40), [[1, 4], [4, 20]])
//   A ~ N(0, 1),  eps ~ N(0, noise)
//   c = [color_weight * s + A > 1]
//   y = [sigmoid(A + I + eps) > 0.5]

#ifndef FAGTB_SYNTHETIC_HPP_
#define FAGTB_SYNTHETIC_HPP_

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "fagtb/data.hpp"
#include "fagtb/errors.hpp"
#include "fagtb/numeric.hpp"

namespace fagtb::synthetic {

struct GeneratorConfig {
  // Weight of gender in the color threshold c = [w*s + A > 1]. At w = 1.0
  // corr(c,s) = 0.36 and corr(c,A) = 0.68; w = 1.5 gives 0.54 and 0.60.
  double color_weight = 1.0;
  // Dispersion of the label noise; read as a variance unless
  // noise_is_variance is false, in which case it is the standard deviation.
  double noise = 0.1;
  bool noise_is_variance = true;
};

// Per-row latent variables, kept only for diagnostics.
struct Latents {
  std::vector<double> aggressiveness;
  std::vector<double> inattention;
  std::vector<double> noise;
};

struct Sample {
  Dataset data;  // features (color, age), sensitive gender, label claim
  Latents latents;
};

inline Sample generate(std::size_t n, std::uint64_t seed,
                       const GeneratorConfig& config = {}) {
  if (n == 0) throw ArgumentError("synthetic::generate needs n >= 1");
  if (!(config.noise >= 0.0)) throw ArgumentError("noise must be >= 0");

  // Cholesky factor of [[1, 4], [4, 20]].
  constexpr double l11 = 1.0;
  constexpr double l21 = 4.0;
  const double l22 = std::sqrt(20.0 - 16.0);
  const double noise_sd =
      config.noise_is_variance ? std::sqrt(config.noise) : config.noise;

  auto rng = make_stream(seed, "synthetic");
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);

  Sample out;
  Dataset& ds = out.data;
  ds.n = n;
  ds.p = 2;
  ds.feature_names = {"color", "age"};
  ds.sensitive_name = "gender";
  ds.label_name = "claim";
  ds.features.reserve(2 * n);
  ds.sensitive.reserve(n);
  ds.labels.reserve(n);
  out.latents.aggressiveness.reserve(n);
  out.latents.inattention.reserve(n);
  out.latents.noise.reserve(n);

  for (std::size_t i = 0; i < n; ++i) {
    const int s = coin(rng) ? 1 : 0;
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const double inattention = l11 * z1;
    const double age = 40.0 + l21 * z1 + l22 * z2;
    const double aggressiveness = normal(rng);
    const double eps = noise_sd * normal(rng);
    const int color = config.color_weight * s + aggressiveness > 1.0 ? 1 : 0;
    const int claim = aggressiveness + inattention + eps > 0.0 ? 1 : 0;

    ds.features.push_back(color);
    ds.features.push_back(age);
    ds.sensitive.push_back(s);
    ds.labels.push_back(claim);
    out.latents.aggressiveness.push_back(aggressiveness);
    out.latents.inattention.push_back(inattention);
    out.latents.noise.push_back(eps);
  }
  return out;
}

inline void write_latents_csv(std::ostream& out, const Latents& latents) {
  out << "aggressiveness,inattention,noise\n";
  for (std::size_t i = 0; i < latents.aggressiveness.size(); ++i) {
    out << format_real(latents.aggressiveness[i]) << ','
        << format_real(latents.inattention[i]) << ','
        << format_real(latents.noise[i]) << '\n';
  }
}

}  // namespace fagtb::synthetic

#endif  // FAGTB_SYNTHETIC_HPP_

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

#ifndef FAGTB_NUMERIC_HPP_
#define FAGTB_NUMERIC_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace fagtb {

// Probability clip applied before every log in the likelihood losses.
inline constexpr double kProbabilityClip = 1e-7;

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Negative log-likelihood of a Bernoulli outcome given its logit, with the
// probability clipped to [kProbabilityClip, 1 - kProbabilityClip].
inline double bernoulli_nll(int outcome, double logit) {
  const double p =
      std::clamp(sigmoid(logit), kProbabilityClip, 1.0 - kProbabilityClip);
  return outcome == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// FNV-1a, used for stable seed derivation and dataset fingerprints.
inline std::uint64_t fnv1a(const void* data, std::size_t size,
                           std::uint64_t hash = 14695981039346656037ULL) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ULL;
  }
  return hash;
}

// Independent generator for a named sub-stream of a run seed ("split",
// "init", "shuffle", ...). Streams with different names do not overlap in
// practice and never depend on how much another stream was consumed.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name) {
  const std::uint64_t tag = fnv1a(name.data(), name.size());
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(tag >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace fagtb

#endif  // FAGTB_NUMERIC_HPP_

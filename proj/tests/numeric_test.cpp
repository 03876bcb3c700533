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
#include <limits>

#include <gtest/gtest.h>

#include "fagtb/numeric.hpp"

namespace fagtb {
namespace {

TEST(Sigmoid, KnownValues) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(0.5), 0.622459331201855, 1e-12);
  EXPECT_NEAR(sigmoid(std::log(3.0)), 0.75, 1e-15);
  EXPECT_NEAR(sigmoid(-2.0), 1.0 - sigmoid(2.0), 1e-15);
}

TEST(Sigmoid, ExtremeInputsStayFinite) {
  EXPECT_EQ(sigmoid(-1000.0), 0.0);
  EXPECT_EQ(sigmoid(1000.0), 1.0);
  EXPECT_GT(sigmoid(-700.0), 0.0);
}

TEST(BernoulliNll, SymmetricPoint) {
  EXPECT_NEAR(bernoulli_nll(1, 0.0), 0.693147180559945, 1e-12);
  EXPECT_NEAR(bernoulli_nll(0, 0.0), 0.693147180559945, 1e-12);
  EXPECT_NEAR(bernoulli_nll(1, 2.0), 0.126928011042973, 1e-12);
}

TEST(BernoulliNll, ClippedAtBothEnds) {
  const double cap = -std::log(kProbabilityClip);
  EXPECT_NEAR(bernoulli_nll(1, -1e6), cap, 1e-9);
  EXPECT_NEAR(bernoulli_nll(0, 1e6), cap, 1e-9);
  EXPECT_NEAR(bernoulli_nll(1, 1e6), -std::log1p(-kProbabilityClip), 1e-15);
  EXPECT_TRUE(std::isfinite(bernoulli_nll(0, std::numeric_limits<double>::max())));
}

TEST(MakeStream, DeterministicPerSeedAndName) {
  auto a = make_stream(7, "split");
  auto b = make_stream(7, "split");
  auto c = make_stream(7, "init");
  auto d = make_stream(8, "split");
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
}

TEST(Fnv1a, ReferenceValues) {
  EXPECT_EQ(fnv1a("", 0), 14695981039346656037ULL);
  EXPECT_EQ(fnv1a("a", 1), 0xaf63dc4c8601ec8cULL);
}

}  // namespace
}  // namespace fagtb

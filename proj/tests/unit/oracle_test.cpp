// Copyright 2026 The stipp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "path_oracle.hpp"
#include "stipp/planner/oracle.hpp"

namespace stipp::planner {
namespace {

using namespace stipp::testing;

TEST(OracleBestPath, OneStepFourLocations) {
  std::mt19937_64 rng(60);
  const CandidateGrid g = random_grid(rng, 4, 1);
  const Dataset2 d = random_dataset(rng, 3);
  const Hyperparams h{1.0, 3.0, 5.0, 0.1};
  const OracleResult r = oracle_best_path(g, d, h, 1);
  EXPECT_EQ(r.num_paths, 4u);
  EXPECT_TRUE(r.agree());
  // Cross-check the winning score and that no other path beats it.
  EXPECT_NEAR(r.min_conditional_entropy, brute_conditional_entropy(g, d, h, r.by_conditional_entropy),
              1e-6);
  for (int a = 0; a < 4; ++a) {
    EXPECT_GE(brute_conditional_entropy(g, d, h, {a}), r.min_conditional_entropy - 1e-6);
  }
}

TEST(OracleBestPath, SingleCandidate) {
  std::mt19937_64 rng(61);
  const CandidateGrid g = random_grid(rng, 1, 2);
  const OracleResult r = oracle_best_path(g, random_dataset(rng, 3), {1.0, 3.0, 5.0, 0.1}, 2);
  EXPECT_EQ(r.by_conditional_entropy, std::vector<int>({0, 0}));
  EXPECT_EQ(r.by_path_entropy, std::vector<int>({0, 0}));
}

TEST(OracleBestPath, TwoStepsFiveLocations) {
  std::mt19937_64 rng(62);
  const CandidateGrid g = random_grid(rng, 5, 2);
  const Dataset2 d = random_dataset(rng, 4);
  const Hyperparams h{1.0, 3.0, 5.0, 0.1};
  const OracleResult r = oracle_best_path(g, d, h, 2);
  EXPECT_EQ(r.num_paths, 25u);
  EXPECT_TRUE(r.agree());
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      EXPECT_GE(brute_conditional_entropy(g, d, h, {a, b}), r.min_conditional_entropy - 1e-6);
}

TEST(OracleBestPath, CriteriaAgreeOnRandomInstances) {
  std::mt19937_64 rng(63);
  for (int trial = 0; trial < 50; ++trial) {
    const int horizon = uniform_int(rng, 1, 2);
    const CandidateGrid g = random_grid(rng, uniform_int(rng, 2, 6), horizon);
    const Dataset2 d = random_dataset(rng, uniform_int(rng, 1, 8));
    const OracleResult r = oracle_best_path(g, d, random_hyperparams(rng), horizon);
    EXPECT_TRUE(r.agree()) << "trial " << trial;
  }
}

TEST(OracleBestPath, Guards) {
  std::mt19937_64 rng(64);
  CandidateGrid g = random_grid(rng, 20, 2);
  const Dataset2 d = random_dataset(rng, 3);
  EXPECT_THROW(oracle_best_path(g, d, Hyperparams{}, 3), PreconditionError);
  g = random_grid(rng, 400, 2);
  EXPECT_THROW(oracle_best_path(g, d, Hyperparams{}, 2), PreconditionError);
  g.times = {13.0, 11.0, 12.0};
  EXPECT_THROW(g.validate(), PreconditionError);
}

}  // namespace
}  // namespace stipp::planner

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

// Agreement check for the single-robot path oracle on random enumerable
// instances drawn from a scenario: candidate locations uniform in Q, training
// data sampled from the scenario's dataset, prediction times spaced by one
// simulation step.

#ifndef STIPP_HARNESS_ORACLE_CHECK_HPP
#define STIPP_HARNESS_ORACLE_CHECK_HPP

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "stipp/harness/config.hpp"
#include "stipp/harness/scenario.hpp"
#include "stipp/planner/oracle.hpp"

namespace stipp::harness {

struct OracleInstance {
  planner::CandidateGrid grid;
  Dataset2 train;
  int horizon = 1;
};

struct OracleCheckResult {
  int instances = 0;
  int agreements = 0;
  std::vector<planner::OracleResult> results;
};

inline std::vector<OracleInstance> oracle_instances(const ScenarioConfig& cfg, const Dataset2& field,
                                                    double time_span, int count) {
  if (field.empty()) throw PreconditionError("oracle_instances: empty dataset");
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> ux(cfg.workspace.lo.x(), cfg.workspace.hi.x());
  std::uniform_real_distribution<double> uy(cfg.workspace.lo.y(), cfg.workspace.hi.y());
  std::uniform_int_distribution<int> n_loc(3, 6), horizon(1, 2);
  const double dt = time_span / cfg.steps;
  const auto n_train = std::min<std::size_t>(8, field.size());

  std::vector<OracleInstance> out;
  for (int c = 0; c < count; ++c) {
    OracleInstance inst;
    inst.horizon = horizon(rng);
    const int locations = n_loc(rng);
    for (int a = 0; a < locations; ++a) {
      const double x = ux(rng);
      const double y = uy(rng);
      inst.grid.locations.emplace_back(x, y);
    }
    std::vector<std::size_t> idx(field.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    double t0 = 0.0;
    for (std::size_t a = 0; a < n_train; ++a) {
      const std::size_t r = idx[a];
      inst.train.push_back(field.positions[r], field.timestamps[r], field.values[r], field.provenance[r]);
      t0 = std::max(t0, field.timestamps[r]);
    }
    inst.grid.times = {t0};
    for (int h = 1; h <= inst.horizon; ++h) {
      inst.grid.times.push_back(t0 + h * dt);
      inst.grid.prediction_times.push_back(t0 + h * dt);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

inline OracleCheckResult run_oracle_check(const ScenarioConfig& cfg, int count) {
  cfg.validate();
  const LoadedData loaded = load_dataset(cfg);
  const Dataset2& field = loaded.data.data;
  const double span = *std::max_element(field.timestamps.begin(), field.timestamps.end());
  if (!(span > 0.0)) throw PreconditionError("oracle check: dataset spans zero time");
  OracleCheckResult res;
  for (const auto& inst : oracle_instances(cfg, field, span, count)) {
    res.results.push_back(planner::oracle_best_path(inst.grid, inst.train, cfg.hyperparams, inst.horizon));
    ++res.instances;
    if (res.results.back().agree()) ++res.agreements;
  }
  return res;
}

}  // namespace stipp::harness

#endif  // STIPP_HARNESS_ORACLE_CHECK_HPP

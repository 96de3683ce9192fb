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

// Exhaustive single-robot path selection over a candidate grid, scored two
// ways: (a) the entropy left in the whole grid U after also observing the
// path, S(U | D, y_path), by explicit conditioning; (b) the entropy of the
// path itself, S(y_path | D). Since y_path is part of U the two sum to the
// constant S(U | D), so argmin (a) and argmax (b) pick the same path.

#ifndef STIPP_PLANNER_ORACLE_HPP
#define STIPP_PLANNER_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "stipp/errors.hpp"
#include "stipp/gp.hpp"
#include "stipp/planner/types.hpp"

namespace stipp::planner {

inline constexpr std::size_t kMaxOraclePaths = 100000;

struct OracleResult {
  // Location indices into CandidateGrid::locations, one per horizon step.
  std::vector<int> by_conditional_entropy;
  std::vector<int> by_path_entropy;
  double min_conditional_entropy = 0.0;
  double max_path_entropy = 0.0;
  std::size_t num_paths = 0;

  bool agree() const { return by_conditional_entropy == by_path_entropy; }
};

inline OracleResult oracle_best_path(const CandidateGrid& grid, const Dataset2& train,
                                     const Hyperparams& h, int horizon) {
  grid.validate();
  if (horizon < 1 || static_cast<int>(grid.prediction_times.size()) != horizon) {
    throw PreconditionError("oracle_best_path: horizon must match prediction_times");
  }
  const int n_loc = static_cast<int>(grid.locations.size());
  const int n_time = static_cast<int>(grid.times.size());
  double count = 1.0;
  for (int k = 0; k < horizon; ++k) count *= n_loc;
  if (count > static_cast<double>(kMaxOraclePaths)) {
    throw PreconditionError("oracle_best_path: enumeration budget exceeded");
  }
  const auto n_paths = static_cast<std::size_t>(count);

  // U ordered location-major: index = loc * n_time + time.
  std::vector<SpaceTimePoint<2>> u_points;
  for (const auto& s : grid.locations) {
    for (double t : grid.times) u_points.push_back({s, t});
  }
  const Eigen::MatrixXd cov_u = gp::posterior<2>(train, u_points, h, 0.0).cov;
  const int n_u = static_cast<int>(u_points.size());

  std::vector<int> time_index(horizon);
  for (int k = 0; k < horizon; ++k) {
    time_index[k] = static_cast<int>(
        std::lower_bound(grid.times.begin(), grid.times.end(), grid.prediction_times[k]) -
        grid.times.begin());
  }

  OracleResult res;
  res.num_paths = n_paths;
  res.min_conditional_entropy = std::numeric_limits<double>::infinity();
  res.max_path_entropy = -std::numeric_limits<double>::infinity();

  std::vector<int> path(horizon, 0);
  for (std::size_t code = 0; code < n_paths; ++code) {
    std::size_t rem = code;
    for (int k = horizon - 1; k >= 0; --k) {
      path[k] = static_cast<int>(rem % n_loc);
      rem /= n_loc;
    }
    std::vector<int> obs(horizon);
    for (int k = 0; k < horizon; ++k) obs[k] = path[k] * n_time + time_index[k];
    std::vector<int> rest;
    for (int a = 0; a < n_u; ++a) {
      if (std::find(obs.begin(), obs.end(), a) == obs.end()) rest.push_back(a);
    }

    Eigen::MatrixXd s_oo(horizon, horizon);
    for (int a = 0; a < horizon; ++a)
      for (int b = 0; b < horizon; ++b) s_oo(a, b) = cov_u(obs[a], obs[b]);
    const double path_entropy = gp::entropy_logdet(s_oo);

    double conditional_entropy = 0.0;
    if (!rest.empty()) {
      const auto nr = static_cast<Eigen::Index>(rest.size());
      Eigen::MatrixXd s_rr(nr, nr), s_ro(nr, horizon);
      for (Eigen::Index a = 0; a < nr; ++a) {
        for (Eigen::Index b = 0; b < nr; ++b) s_rr(a, b) = cov_u(rest[a], rest[b]);
        for (int b = 0; b < horizon; ++b) s_ro(a, b) = cov_u(rest[a], obs[b]);
      }
      const auto llt = factorize(s_oo, "oracle_best_path");
      Eigen::MatrixXd cond = s_rr - s_ro * llt.solve(s_ro.transpose());
      cond = 0.5 * (cond + cond.transpose()).eval();
      conditional_entropy = gp::entropy_logdet(cond);
    }

    if (conditional_entropy < res.min_conditional_entropy) {
      res.min_conditional_entropy = conditional_entropy;
      res.by_conditional_entropy = path;
    }
    if (path_entropy > res.max_path_entropy) {
      res.max_path_entropy = path_entropy;
      res.by_path_entropy = path;
    }
  }
  return res;
}

}  // namespace stipp::planner

#endif  // STIPP_PLANNER_ORACLE_HPP

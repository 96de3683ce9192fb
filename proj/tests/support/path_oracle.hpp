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

// Candidate grids and an independent path scorer for the enumeration oracle.

#ifndef STIPP_TESTS_SUPPORT_PATH_ORACLE_HPP
#define STIPP_TESTS_SUPPORT_PATH_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "generators.hpp"
#include "oracles.hpp"
#include "stipp/planner/oracle.hpp"

namespace stipp::testing {

using planner::CandidateGrid;

inline CandidateGrid random_grid(std::mt19937_64& rng, int n_loc, int horizon) {
  CandidateGrid g;
  for (int a = 0; a < n_loc; ++a) g.locations.push_back(uniform_point(rng, 0.0, 10.0, 0.0, 10.0));
  g.times = {9.0};
  for (int h = 1; h <= horizon; ++h) {
    g.prediction_times.push_back(10.0 + h);
    g.times.push_back(10.0 + h);
  }
  return g;
}

// Independent scoring of one path: conditional entropy of U given D and the
// path, from brute joint conditioning on the noiseless path values.
inline double brute_conditional_entropy(const CandidateGrid& g, const Dataset2& d, const Hyperparams& h,
                                 const std::vector<int>& path) {
  std::vector<StPoint> u;
  for (const auto& s : g.locations)
    for (double t : g.times) u.push_back({s, t});
  const Conditioned post = brute_condition(to_ref(d), d.value_vector(), u, h.sigma2, h.ell_s, h.ell_t,
                                           h.noise_var, 0.0);
  std::vector<int> obs, rest;
  const int nt = static_cast<int>(g.times.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    const int ti = static_cast<int>(
        std::find(g.times.begin(), g.times.end(), g.prediction_times[k]) - g.times.begin());
    obs.push_back(path[k] * nt + ti);
  }
  for (int a = 0; a < static_cast<int>(u.size()); ++a)
    if (std::find(obs.begin(), obs.end(), a) == obs.end()) rest.push_back(a);
  const auto no = static_cast<Eigen::Index>(obs.size()), nr = static_cast<Eigen::Index>(rest.size());
  Eigen::MatrixXd soo(no, no), sro(nr, no), srr(nr, nr);
  for (Eigen::Index a = 0; a < no; ++a)
    for (Eigen::Index b = 0; b < no; ++b) soo(a, b) = post.cov(obs[a], obs[b]);
  for (Eigen::Index a = 0; a < nr; ++a) {
    for (Eigen::Index b = 0; b < no; ++b) sro(a, b) = post.cov(rest[a], obs[b]);
    for (Eigen::Index b = 0; b < nr; ++b) srr(a, b) = post.cov(rest[a], rest[b]);
  }
  const Eigen::MatrixXd cond = srr - sro * soo.fullPivLu().inverse() * sro.transpose();
  return 0.5 * std::log(cond.determinant()) +
         0.5 * static_cast<double>(nr) * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

}  // namespace stipp::testing

#endif  // STIPP_TESTS_SUPPORT_PATH_ORACLE_HPP

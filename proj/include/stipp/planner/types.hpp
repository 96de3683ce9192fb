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

#ifndef STIPP_PLANNER_TYPES_HPP
#define STIPP_PLANNER_TYPES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "stipp/errors.hpp"
#include "stipp/kernel.hpp"
#include "stipp/swarm.hpp"

namespace stipp::planner {

// A robot's primal variables. Every path is stacked as
// [x_1, y_1, x_2, y_2, ..., x_H, y_H]; zeta[owner] is the robot's own plan,
// the other entries are its copies of neighbor plans.
struct PathPlan {
  int owner = 0;
  int horizon = 0;
  std::map<int, Eigen::VectorXd> zeta;
  std::vector<double> prediction_times;
  // (dv, dtheta) per step of the own plan, stacked like the paths.
  Eigen::VectorXd controls;

  const Eigen::VectorXd& own() const { return zeta.at(owner); }
  Point2 waypoint(int robot, int h) const { return zeta.at(robot).segment<2>(2 * h); }
};

// Dual variables lambda_ij held by robot i, keyed by neighbor j.
struct DualState {
  std::map<int, Eigen::VectorXd> lambda;
};

// Robot i's feasible set: own path follows the linear model with box-bounded
// increments, every waypoint stays in the workspace, and the own path stays
// within `radius` of the copies of preserved neighbors at every step.
//
// Over the horizon the model is frozen at the current speed and heading, so
// step h moves by drift + B (u_1 + ... + u_h), and the planned speed
// speed + dv_1 + ... + dv_h stays within +-speed_max.
struct LocalConstraints {
  Workspace workspace;
  swarm::LinearModel model;
  Point2 current_position = Point2::Zero();
  double dv_max = 1.0;
  double dtheta_max = 1.0;
  double speed = 0.0;
  double speed_max = std::numeric_limits<double>::infinity();
  double radius = 1.0;
  int horizon = 1;
  std::vector<int> neighbors;  // block order of the copies
  std::vector<int> preserved;  // subset of neighbors
  // Optional per-link radius, parallel to `preserved`; `radius` otherwise.
  std::vector<double> preserved_radius;

  void validate() const {
    if (!preserved_radius.empty() && preserved_radius.size() != preserved.size()) {
      throw PreconditionError("LocalConstraints: preserved_radius size mismatch");
    }
    if (!workspace.valid()) throw PreconditionError("LocalConstraints: empty workspace");
    if (horizon < 1) throw PreconditionError("LocalConstraints: horizon must be >= 1");
    if (!(dv_max >= 0.0) || !(dtheta_max >= 0.0) || !(radius > 0.0)) {
      throw PreconditionError("LocalConstraints: bounds must be non-negative");
    }
    if (!(std::fabs(speed) <= speed_max)) {
      throw PreconditionError("LocalConstraints: current speed exceeds speed_max");
    }
    for (int s : preserved) {
      if (std::find(neighbors.begin(), neighbors.end(), s) == neighbors.end()) {
        throw PreconditionError("LocalConstraints: preserved robot is not a neighbor");
      }
    }
  }
};

struct CandidateGrid {
  std::vector<Point2> locations;
  // Sorted; contains every prediction time and ends at the last one.
  std::vector<double> times;
  std::vector<double> prediction_times;

  void validate() const {
    if (locations.empty() || times.empty() || prediction_times.empty()) {
      throw PreconditionError("CandidateGrid: empty locations or times");
    }
    if (!std::is_sorted(times.begin(), times.end())) {
      throw PreconditionError("CandidateGrid: times not sorted");
    }
    if (times.back() != prediction_times.back()) {
      throw PreconditionError("CandidateGrid: last time must be the last prediction time");
    }
    for (double t : prediction_times) {
      if (!std::binary_search(times.begin(), times.end(), t)) {
        throw PreconditionError("CandidateGrid: prediction time missing from times");
      }
    }
  }
};

}  // namespace stipp::planner

#endif  // STIPP_PLANNER_TYPES_HPP

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

// Single-robot QP instances and a brute-force grid oracle for H = 1.

#ifndef STIPP_TESTS_SUPPORT_QP_GRID_HPP
#define STIPP_TESTS_SUPPORT_QP_GRID_HPP

#include <cmath>
#include <limits>
#include <random>

#include "generators.hpp"
#include "stipp/planner/qp.hpp"

namespace stipp::testing {

using planner::LocalConstraints;
using planner::QpResult;
using planner::solve_local_qp;

inline swarm::RobotState robot(const Point2& p, double speed, double heading) {
  swarm::RobotState s;
  s.position = p;
  s.speed = speed;
  s.heading = heading;
  return s;
}

inline swarm::RobotState random_robot(std::mt19937_64& rng, double lo_x, double hi_x, double lo_y,
                               double hi_y, double max_speed) {
  const double x = uniform(rng, lo_x, hi_x);
  const double y = uniform(rng, lo_y, hi_y);
  const double v = uniform(rng, 0.5, max_speed);
  const double th = uniform(rng, -3.0, 3.0);
  return robot(Point2(x, y), v, th);
}

inline LocalConstraints single_robot(const swarm::RobotState& s, const Workspace& q, double dmax, int horizon) {
  LocalConstraints c;
  c.workspace = q;
  c.model = swarm::linearize(s, 1.0);
  c.current_position = s.position;
  c.dv_max = dmax;
  c.dtheta_max = dmax;
  c.radius = 20.0;
  c.horizon = horizon;
  return c;
}

inline Eigen::VectorXd stay(const Point2& p, int horizon) {
  Eigen::VectorXd z(2 * horizon);
  for (int h = 0; h < horizon; ++h) z.segment<2>(2 * h) = p;
  return z;
}

struct GridInstance {
  swarm::RobotState s;
  double dmax;
  Point2 neighbor;
  double radius;
  Point2 target;
  double q;
};

// H = 1 on Q = [0, 10]^2 with the link ball to a fixed neighbor.
inline GridInstance random_grid_instance(std::mt19937_64& rng, double dmax) {
  GridInstance g;
  g.s = random_robot(rng, 1.0, 9.0, 1.0, 9.0, 2.0);
  g.dmax = dmax;
  g.radius = uniform(rng, 2.0, 6.0);
  const double ang = uniform(rng, -3.14, 3.14);
  const double dist = uniform(rng, 0.0, g.radius);
  g.neighbor = g.s.position + dist * Point2(std::cos(ang), std::sin(ang));
  const double tx = uniform(rng, -5.0, 15.0);
  const double ty = uniform(rng, -5.0, 15.0);
  g.target = Point2(tx, ty);
  g.q = uniform(rng, 0.5, 3.0);
  return g;
}

struct GridAnswer {
  Point2 solver;
  Point2 grid;
  double solver_value;
  double grid_value;
  double optimality_residual;
  // Distance from the solver point to the nearest grid point that the grid
  // cannot tell apart from its own best at 0.01 m resolution.
  double distance_to_grid_optimal_set;
};

inline GridAnswer solve_both(const GridInstance& g) {
  const Workspace box{Point2(0.0, 0.0), Point2(10.0, 10.0)};
  LocalConstraints c = single_robot(g.s, box, g.dmax, 1);
  c.radius = g.radius;
  c.neighbors = {7};
  c.preserved = {7};
  Eigen::VectorXd lin(4);
  lin << -g.q * g.target, Eigen::Vector2d::Zero();
  const QpResult r = solve_local_qp(lin, g.q, Eigen::VectorXd::Zero(4), c, {{7, g.neighbor, true}});

  GridAnswer a;
  a.solver = r.zeta.head<2>();
  a.solver_value = (a.solver - g.target).squaredNorm();
  a.optimality_residual = r.optimality_residual;
  const Eigen::Matrix2d binv = c.model.b.inverse();
  a.grid_value = std::numeric_limits<double>::infinity();
  for (int ix = 0; ix <= 1000; ++ix) {
    for (int iy = 0; iy <= 1000; ++iy) {
      const Point2 x(0.01 * ix, 0.01 * iy);
      if ((x - g.neighbor).norm() > g.radius) continue;
      const Eigen::Vector2d u = binv * (x - g.s.position - c.model.drift);
      if (std::fabs(u[0]) > g.dmax || std::fabs(u[1]) > g.dmax) continue;
      const double v = (x - g.target).squaredNorm();
      if (v < a.grid_value) {
        a.grid_value = v;
        a.grid = x;
      }
    }
  }
  // Every feasible grid point within h of the true optimum x* scores at most
  // f* + |grad f(x*)| h + h^2 <= best + 2 sqrt(best) h + h^2.
  const double h = 0.01;
  const double slack = 2.0 * std::sqrt(a.grid_value) * h + h * h + 1e-12;
  a.distance_to_grid_optimal_set = std::numeric_limits<double>::infinity();
  for (int ix = 0; ix <= 1000; ++ix) {
    for (int iy = 0; iy <= 1000; ++iy) {
      const Point2 x(h * ix, h * iy);
      if ((x - a.solver).norm() >= a.distance_to_grid_optimal_set) continue;
      if ((x - g.neighbor).norm() > g.radius) continue;
      const Eigen::Vector2d u = binv * (x - g.s.position - c.model.drift);
      if (std::fabs(u[0]) > g.dmax || std::fabs(u[1]) > g.dmax) continue;
      if ((x - g.target).squaredNorm() > a.grid_value + slack) continue;
      a.distance_to_grid_optimal_set = (x - a.solver).norm();
    }
  }
  return a;
}

}  // namespace stipp::testing

#endif  // STIPP_TESTS_SUPPORT_QP_GRID_HPP

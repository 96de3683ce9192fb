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

// Unicycle robots on the plane, their disk communication graph, and the
// relative-neighbor edge selection that keeps the graph connected after
// one step of motion.

#ifndef STIPP_SWARM_HPP
#define STIPP_SWARM_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stipp/errors.hpp"
#include "stipp/kernel.hpp"

namespace stipp {

// Axis-aligned box.
struct Workspace {
  Point2 lo = Point2(0.0, 0.0);
  Point2 hi = Point2(1.0, 1.0);

  bool valid() const { return (lo.array() <= hi.array()).all(); }
  bool contains(const Point2& p, double tol = 0.0) const {
    return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
  }
  Point2 clamp(const Point2& p) const { return p.cwiseMax(lo).cwiseMin(hi); }
};

namespace swarm {

// Wraps to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  w -= std::numbers::pi;
  return w == -std::numbers::pi ? std::numbers::pi : w;
}

struct RobotState {
  int id = 1;  // 1-based
  Point2 position = Point2::Zero();
  double speed = 0.0;
  double heading = 0.0;
  double delta_v_max = 1.0;
  double delta_theta_max = 1.0;
  // Planned speeds stay within +-speed_max. With speed_max <= delta_v_max
  // a robot can always stop in one step.
  double speed_max = std::numeric_limits<double>::infinity();
};

// Edges are stored once with first < second; vertices are 0-based indices.
class CommGraph {
 public:
  CommGraph() = default;
  CommGraph(int num_vertices, double radius, std::vector<std::pair<int, int>> edges)
      : num_vertices_(num_vertices), radius_(radius), adjacency_(num_vertices) {
    for (auto [a, b] : edges) {
      if (a == b || a < 0 || b < 0 || a >= num_vertices || b >= num_vertices) {
        throw DomainError("CommGraph: invalid edge");
      }
      if (a > b) std::swap(a, b);
      edges_.emplace_back(a, b);
    }
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    for (auto [a, b] : edges_) {
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    for (auto& n : adjacency_) std::sort(n.begin(), n.end());
  }

  int num_vertices() const { return num_vertices_; }
  double radius() const { return radius_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const {
    check_vertex(i);
    return adjacency_[i];
  }
  bool has_edge(int a, int b) const {
    check_vertex(a);
    check_vertex(b);
    return std::binary_search(adjacency_[a].begin(), adjacency_[a].end(), b);
  }
  void check_vertex(int i) const {
    if (i < 0 || i >= num_vertices_) {
      std::ostringstream os;
      os << "CommGraph: vertex " << i << " not in graph of " << num_vertices_;
      throw DomainError(os.str());
    }
  }

 private:
  int num_vertices_ = 0;
  double radius_ = 0.0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
};

// Edge iff |p_i - p_j| <= radius (boundary inclusive).
inline CommGraph build_graph(std::span<const Point2> positions, double radius) {
  if (positions.empty()) throw PreconditionError("build_graph: no robots");
  if (!(radius > 0.0)) throw PreconditionError("build_graph: radius must be positive");
  const int m = static_cast<int>(positions.size());
  const double r2 = radius * radius;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if ((positions[i] - positions[j]).squaredNorm() <= r2) edges.emplace_back(i, j);
    }
  }
  return CommGraph(m, radius, std::move(edges));
}

inline bool is_connected(const CommGraph& g) {
  const int m = g.num_vertices();
  if (m <= 1) return true;
  std::vector<char> seen(m, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int n : g.neighbors(v)) {
      if (!seen[n]) {
        seen[n] = 1;
        ++count;
        stack.push_back(n);
      }
    }
  }
  return count == m;
}

inline constexpr double kTieTolerance = 1e-9;

// Neighbors j of i whose edge must survive the next step. The edge (i, j) is
// dropped when some other neighbor l of i, itself adjacent to j, is strictly
// closer to both i and j than they are to each other. Comparisons within a
// relative 1e-9 count as ties and never prune, so rounding in the inputs
// cannot break an exact tie. The rule is symmetric in (i, j), so j in S_i iff
// i in S_j.
inline std::vector<int> preserve_set(int i, const CommGraph& g, std::span<const Point2> positions) {
  g.check_vertex(i);
  if (static_cast<int>(positions.size()) != g.num_vertices()) {
    throw PreconditionError("preserve_set: positions do not match graph");
  }
  const auto& nbrs = g.neighbors(i);
  std::vector<int> kept;
  for (int j : nbrs) {
    const double d_ij = (positions[i] - positions[j]).squaredNorm();
    const double bound = d_ij * (1.0 - kTieTolerance);
    bool keep = true;
    for (int l : nbrs) {
      if (l == j || !g.has_edge(l, j)) continue;
      const double d_il = (positions[i] - positions[l]).squaredNorm();
      const double d_jl = (positions[j] - positions[l]).squaredNorm();
      if (d_il < bound && d_jl < bound) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(j);
  }
  return kept;
}

inline void check_control(const RobotState& s, double dv, double dtheta) {
  constexpr double kSlack = 1e-12;
  if (!std::isfinite(dv) || !std::isfinite(dtheta) ||
      std::abs(dv) > s.delta_v_max * (1.0 + kSlack) ||
      std::abs(dtheta) > s.delta_theta_max * (1.0 + kSlack)) {
    std::ostringstream os;
    os << "robot " << s.id << ": control (" << dv << ", " << dtheta << ") outside bounds ("
       << s.delta_v_max << ", " << s.delta_theta_max << ")";
    throw DomainError(os.str());
  }
}

// Euler step of the unicycle; speed and heading are updated first and the
// position is integrated with the new values.
inline RobotState step_dynamics(const RobotState& s, double dv, double dtheta, double tau) {
  check_control(s, dv, dtheta);
  RobotState next = s;
  next.speed = s.speed + dv;
  next.heading = wrap_angle(s.heading + dtheta);
  next.position = s.position +
                  tau * next.speed * Point2(std::cos(next.heading), std::sin(next.heading));
  return next;
}

struct LinearModel {
  Eigen::Matrix2d a;
  Eigen::Matrix2d b;
  // Displacement over one step at the expansion speed and heading.
  Eigen::Vector2d drift = Eigen::Vector2d::Zero();
};

// First-order expansion of step_dynamics in u = (dv, dtheta) at the current
// speed and heading: p' = A p + drift + B u.
inline LinearModel linearize(const RobotState& s, double tau) {
  const double c = std::cos(s.heading);
  const double sn = std::sin(s.heading);
  LinearModel m;
  m.a.setIdentity();
  m.b << c, -s.speed * sn, sn, s.speed * c;
  m.b *= tau;
  m.drift = tau * s.speed * Eigen::Vector2d(c, sn);
  return m;
}

}  // namespace swarm
}  // namespace stipp

#endif  // STIPP_SWARM_HPP

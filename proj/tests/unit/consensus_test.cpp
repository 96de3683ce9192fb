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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "stipp/planner/consensus.hpp"

namespace stipp::planner {
namespace {

using stipp::testing::uniform;
using stipp::testing::uniform_int;
using stipp::testing::uniform_point;

const Workspace kQ{Point2(0.0, -20.0), Point2(100.0, 0.0)};
const Hyperparams kH{4.0, 25.0, 21600.0, 0.01};
constexpr double kR = 20.0;

TEST(ConvexModel, ZeroGradientMinimizerIsAnchor) {
  const Eigen::VectorXd anchor = Eigen::VectorXd::LinSpaced(6, -1.0, 4.0);
  const QuadraticModel m = convex_model(Eigen::VectorXd::Zero(6), anchor, 2.5);
  // Unconstrained minimizer of linear^T z + (q/2)|z|^2.
  EXPECT_LE((-m.linear / m.weight - anchor).norm(), 1e-14);
}

TEST(ConvexModel, FirstOrderConsistentAtAnchor) {
  std::mt19937_64 rng(50);
  Eigen::VectorXd g(6), a(6);
  for (int k = 0; k < 6; ++k) {
    g[k] = uniform(rng, -3.0, 3.0);
    a[k] = uniform(rng, -3.0, 3.0);
  }
  const QuadraticModel m = convex_model(g, a, 1.7, 4.2);
  EXPECT_DOUBLE_EQ(m.value(a), 4.2);
  EXPECT_LE((m.model_gradient(a) - g).norm(), 1e-14);
}

TEST(ConvexModel, CollectedFormDiffersByConstant) {
  std::mt19937_64 rng(51);
  Eigen::VectorXd g(6), a(6);
  for (int k = 0; k < 6; ++k) {
    g[k] = uniform(rng, -3.0, 3.0);
    a[k] = uniform(rng, -3.0, 3.0);
  }
  const QuadraticModel m = convex_model(g, a, 0.8, -1.0);
  std::vector<double> gaps;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd z(6);
    for (int k = 0; k < 6; ++k) z[k] = uniform(rng, -10.0, 10.0);
    gaps.push_back(m.value(z) - (m.linear.dot(z) + 0.5 * m.weight * z.squaredNorm()));
    EXPECT_NEAR(m.value(z), m.collected_value(z), 1e-10);
  }
  for (double gap : gaps) EXPECT_NEAR(gap, gaps.front(), 1e-10);
  EXPECT_THROW(convex_model(g, a, 0.0), PreconditionError);
}

TEST(DualUpdate, Examples) {
  const Eigen::VectorXd l = Eigen::VectorXd::LinSpaced(4, 1.0, 4.0);
  const Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(4, -2.0, 2.0);
  EXPECT_EQ(dual_update(l, z, z, 0.3), l);
  const Eigen::VectorXd d = Eigen::VectorXd::Constant(4, 2.0);
  EXPECT_LE((dual_update(Eigen::VectorXd::Zero(4), d, Eigen::VectorXd::Zero(4), 0.5) + 0.5 * d).norm(), 0.0);
  EXPECT_THROW(dual_update(l, z, z, 0.0), PreconditionError);
}

// minimize a (x - 1)^2 + b (y - 3)^2 subject to x = y, by dual ascent on
// L = a (x - 1)^2 + b (y - 3)^2 - lambda (x - y). The optimum is
// x = y = (a + 3 b) / (a + b).
TEST(DualUpdate, TwoVariableConsensusToy) {
  const double a = 1.0, b = 2.0;
  const double optimum = (a + 3.0 * b) / (a + b);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(1);
  double x = 0.0, y = 0.0;
  int n = 1;
  for (; n <= 500; ++n) {
    x = 1.0 + lambda[0] / (2.0 * a);
    y = 3.0 - lambda[0] / (2.0 * b);
    if (std::fabs(x - optimum) < 1e-4 && std::fabs(y - optimum) < 1e-4) break;
    lambda = dual_update(lambda, Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, y),
                         1.0 / std::sqrt(static_cast<double>(n)));
  }
  EXPECT_LE(n, 500);
  EXPECT_NEAR(x, optimum, 1e-4);
  EXPECT_NEAR(y, optimum, 1e-4);
}

struct Scenario {
  std::vector<swarm::RobotState> robots;
  std::vector<Dataset2> datasets;
  swarm::CommGraph graph;
  std::vector<std::vector<int>> preserved;
  std::vector<double> times{21600.0, 22680.0, 23760.0};

  RoundInput input() const {
    RoundInput in;
    in.robots = robots;
    in.datasets = datasets;
    in.graph = &graph;
    in.preserved = preserved;
    in.hyperparams = kH;
    in.workspace = kQ;
    in.tau = 1.0;
    in.prediction_times = times;
    return in;
  }
};

Scenario random_scenario(std::mt19937_64& rng, int m) {
  Scenario s;
  std::vector<Point2> pos;
  for (;;) {
    pos.clear();
    const Point2 start = uniform_point(rng, 10.0, 90.0, -18.0, -2.0);
    pos.push_back(start);
    for (int i = 1; i < m; ++i) {
      // Attach each robot near an earlier one so the graph starts connected.
      const Point2 base = pos[uniform_int(rng, 0, i - 1)];
      pos.push_back(kQ.clamp(base + uniform_point(rng, -15.0, 15.0, -12.0, 12.0)));
    }
    if (swarm::is_connected(swarm::build_graph(pos, kR))) break;
  }
  s.graph = swarm::build_graph(pos, kR);
  for (int i = 0; i < m; ++i) {
    swarm::RobotState r;
    r.id = i + 1;
    r.position = pos[i];
    r.speed = uniform(rng, 0.0, 1.0);
    r.speed_max = 1.0;
    r.heading = uniform(rng, -3.0, 3.0);
    s.robots.push_back(r);
    s.preserved.push_back(swarm::preserve_set(i, s.graph, pos));
    Dataset2 d;
    const int n = uniform_int(rng, 5, 40);
    for (int k = 0; k < n; ++k) {
      const Point2 p = uniform_point(rng, 0.0, 100.0, -20.0, 0.0);
      const double t = uniform(rng, 0.0, 21000.0);
      const double y = 20.0 + uniform(rng, -2.0, 2.0);
      d.push_back(p, t, y, {i, k});
    }
    s.datasets.push_back(d);
  }
  return s;
}

TEST(PlanRound, SingleRobotEqualsOneQpSolve) {
  std::mt19937_64 rng(52);
  Scenario s = random_scenario(rng, 1);
  const PlannerConfig cfg;
  const RoundResult r = plan_round(s.input(), cfg);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_FALSE(r.consensus_failed);

  const Eigen::VectorXd anchor = detail::stay_put(s.robots[0].position, 3);
  std::vector<SpaceTimePoint<2>> q;
  for (int h = 0; h < 3; ++h) q.push_back({s.robots[0].position, s.times[h]});
  const auto vg = gp::neg_logdet_and_grad<2>(s.datasets[0], q, kH);
  LocalConstraints c;
  c.workspace = kQ;
  c.model = swarm::linearize(s.robots[0], 1.0);
  c.current_position = s.robots[0].position;
  c.speed = s.robots[0].speed;
  c.speed_max = s.robots[0].speed_max;
  c.radius = kR - cfg.ball_margin;
  c.horizon = 3;
  const QpResult direct =
      solve_local_qp(convex_model(vg.grad, anchor, cfg.q).linear, cfg.q, Eigen::VectorXd::Zero(6), c, {});
  EXPECT_LE((r.plans[0].own() - direct.zeta).lpNorm<Eigen::Infinity>(), 1e-12);
}

Point2 mirror(const Point2& p) { return Point2(100.0 - p.x(), p.y()); }

TEST(PlanRound, SymmetricPairPlansMirrorPaths) {
  Scenario s;
  swarm::RobotState a, b;
  a.id = 1;
  a.position = Point2(42.0, -10.0);
  a.speed = 0.5;
  a.heading = 0.3;
  b = a;
  b.id = 2;
  b.position = mirror(a.position);
  b.heading = std::numbers::pi - a.heading;
  s.robots = {a, b};
  const std::vector<Point2> pos{a.position, b.position};
  s.graph = swarm::build_graph(pos, kR);
  s.preserved = {{1}, {0}};
  // One dataset, symmetric about x = 50, held by both robots.
  std::mt19937_64 rng(53);
  Dataset2 d;
  for (int k = 0; k < 10; ++k) {
    const Point2 p = uniform_point(rng, 0.0, 50.0, -20.0, 0.0);
    const double t = uniform(rng, 0.0, 21000.0);
    d.push_back(p, t, 20.0, {0, 2 * k});
    d.push_back(mirror(p), t, 20.0, {0, 2 * k + 1});
  }
  s.datasets = {d, d};
  const RoundResult r = plan_round(s.input(), PlannerConfig{});
  EXPECT_FALSE(r.consensus_failed);
  EXPECT_LT(r.residual, 1e-3);
  for (int h = 0; h < 3; ++h) {
    EXPECT_LE((mirror(r.plans[0].waypoint(0, h)) - r.plans[1].waypoint(1, h)).norm(), 1e-3);
    EXPECT_LE((mirror(r.plans[0].waypoint(1, h)) - r.plans[1].waypoint(0, h)).norm(), 1e-3);
  }
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Median residual over 50-iteration windows does not grow, with the stop
// test disabled so the whole trajectory is observed.
TEST(PlanRound, ResidualTrendsDown) {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(600 + seed);
    const Scenario s = random_scenario(rng, uniform_int(rng, 2, 6));
    PlannerConfig cfg;
    cfg.epsilon = 0.0;
    cfg.n_max = 200;
    const RoundResult r = plan_round(s.input(), cfg);
    ASSERT_EQ(r.residual_history.size(), 200u);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w + 50 <= r.residual_history.size(); w += 50) {
      const double med = median({r.residual_history.begin() + w, r.residual_history.begin() + w + 50});
      EXPECT_LE(med, prev + 1e-9) << "seed " << seed << " window " << w / 50;
      prev = med;
    }
    EXPECT_TRUE(r.consensus_failed);
  }
}

// Plans satisfy the local constraints and executing every robot's first
// waypoint keeps the graph connected.
TEST(PlanRound, FeasibleAndConnectivityPreserving) {
  const PlannerConfig cfg;
  int successful = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(700 + seed);
    const Scenario s = random_scenario(rng, uniform_int(rng, 2, 7));
    const RoundResult r = plan_round(s.input(), cfg);
    if (r.consensus_failed) continue;
    ++successful;
    const int m = static_cast<int>(s.robots.size());
    std::vector<Point2> next(m);
    for (int i = 0; i < m; ++i) {
      const PathPlan& plan = r.plans[i];
      const swarm::LinearModel model = swarm::linearize(s.robots[i], 1.0);
      EXPECT_LE(plan.controls.lpNorm<Eigen::Infinity>(), 1.0);
      Point2 p = s.robots[i].position;
      Eigen::Vector2d cumulative = Eigen::Vector2d::Zero();
      for (int h = 0; h < 3; ++h) {
        cumulative += plan.controls.segment<2>(2 * h);
        p = model.a * p + model.drift + model.b * cumulative;
        EXPECT_LE(std::abs(s.robots[i].speed + cumulative[0]), 1.0 + 1e-6);
        EXPECT_LE((plan.waypoint(i, h) - p).norm(), 1e-6);
        for (const auto& [j, path] : plan.zeta) EXPECT_TRUE(kQ.contains(path.segment<2>(2 * h), 1e-6));
        for (int j : s.preserved[i]) {
          const double d0 = (s.robots[i].position - s.robots[j].position).norm();
          const double limit = std::max(kR - cfg.ball_margin, d0);
          EXPECT_LE((plan.waypoint(i, h) - plan.waypoint(j, h)).norm(), limit + 1e-6);
        }
      }
      next[i] = plan.waypoint(i, 0);
    }
    EXPECT_TRUE(swarm::is_connected(swarm::build_graph(next, kR))) << "seed " << seed;
    // Agreement: each neighbor's copy of i is within epsilon of i's own plan.
    for (int i = 0; i < m; ++i) {
      for (int j : s.graph.neighbors(i)) {
        EXPECT_LT((r.plans[i].own() - r.plans[j].zeta.at(i)).norm(), cfg.epsilon);
      }
    }
  }
  EXPECT_GE(successful, 95);
}

TEST(PlanRound, RejectsDisconnectedGraph) {
  std::mt19937_64 rng(54);
  Scenario s = random_scenario(rng, 2);
  s.graph = swarm::CommGraph(2, kR, {});
  s.preserved = {{}, {}};
  EXPECT_THROW(plan_round(s.input(), PlannerConfig{}), PreconditionError);
}

}  // namespace
}  // namespace stipp::planner

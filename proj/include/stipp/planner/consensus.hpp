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

// Distributed planning round by dual decomposition.
//
// Each robot i owns zeta_i = [own path; copies of its neighbors' paths] and
// minimizes a proximal linearization of f_i = -logdet(posterior covariance at
// zeta_i) over its local constraint set. Agreement between a robot's own path
// and its neighbors' copies of it is priced by multipliers lambda_ij:
//
//   L_i = f~_i(zeta_i) - sum_j lambda_ij^T (zeta_ii - zeta_ji)
//   lambda_ij <- lambda_ij - alpha_n (zeta_ii - zeta_ji),  alpha_n = alpha0 / sqrt(n)
//
// so the multiplier step ascends the dual function. Messages travel only
// along graph edges through netsim::exchange_round.

#ifndef STIPP_PLANNER_CONSENSUS_HPP
#define STIPP_PLANNER_CONSENSUS_HPP

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stipp/errors.hpp"
#include "stipp/gp.hpp"
#include "stipp/netsim.hpp"
#include "stipp/planner/qp.hpp"
#include "stipp/planner/types.hpp"
#include "stipp/swarm.hpp"

namespace stipp::planner {

struct PlannerConfig {
  int horizon = 3;
  double q = 1.0;
  double alpha0 = 1.0;
  double epsilon = 1e-3;
  int n_max = 300;
  int qp_max_iters = 5000;
  double qp_tol = 1e-8;
  // Preserved links are planned at radius - ball_margin so that a plan that
  // meets the consensus tolerance still keeps every link within radius.
  double ball_margin = 0.01;
};

// f~(zeta) = f(anchor) + g^T (zeta - anchor) + (q/2) |zeta - anchor|^2
//          = linear^T zeta + (q/2) |zeta|^2 + constant
struct QuadraticModel {
  Eigen::VectorXd anchor;
  Eigen::VectorXd gradient;
  Eigen::VectorXd linear;
  double weight = 1.0;
  double anchor_value = 0.0;
  double constant = 0.0;

  double value(const Eigen::VectorXd& zeta) const {
    const Eigen::VectorXd d = zeta - anchor;
    return anchor_value + gradient.dot(d) + 0.5 * weight * d.squaredNorm();
  }
  double collected_value(const Eigen::VectorXd& zeta) const {
    return linear.dot(zeta) + 0.5 * weight * zeta.squaredNorm() + constant;
  }
  Eigen::VectorXd model_gradient(const Eigen::VectorXd& zeta) const {
    return gradient + weight * (zeta - anchor);
  }
};

inline QuadraticModel convex_model(const Eigen::VectorXd& f_grad, const Eigen::VectorXd& zeta_prev,
                                   double q, double f_value = 0.0) {
  if (!(q > 0.0)) throw PreconditionError("convex_model: q must be positive");
  if (f_grad.size() != zeta_prev.size()) throw PreconditionError("convex_model: size mismatch");
  QuadraticModel m;
  m.anchor = zeta_prev;
  m.gradient = f_grad;
  m.weight = q;
  m.anchor_value = f_value;
  m.linear = f_grad - q * zeta_prev;
  m.constant = f_value - f_grad.dot(zeta_prev) + 0.5 * q * zeta_prev.squaredNorm();
  return m;
}

inline Eigen::VectorXd dual_update(const Eigen::VectorXd& lambda_ij, const Eigen::VectorXd& zeta_ii,
                                   const Eigen::VectorXd& zeta_ji, double alpha_n) {
  if (!(alpha_n > 0.0)) throw PreconditionError("dual_update: step size must be positive");
  return lambda_ij - alpha_n * (zeta_ii - zeta_ji);
}

struct RoundResult {
  std::vector<PathPlan> plans;
  int iterations = 0;
  double residual = 0.0;
  bool consensus_failed = false;
  std::vector<double> residual_history;
  int inexact_qp_solves = 0;
};

struct RoundInput {
  std::span<const swarm::RobotState> robots;
  std::span<const Dataset2> datasets;
  const swarm::CommGraph* graph = nullptr;
  std::span<const std::vector<int>> preserved;
  Hyperparams hyperparams;
  Workspace workspace;
  double tau = 1.0;
  std::vector<double> prediction_times;  // t_{k+1..k+H}
  int step = 0;
};

namespace detail {

inline Eigen::VectorXd stay_put(const Point2& p, int horizon) {
  Eigen::VectorXd out(2 * horizon);
  for (int h = 0; h < horizon; ++h) out.segment<2>(2 * h) = p;
  return out;
}

}  // namespace detail

inline RoundResult plan_round(const RoundInput& in, const PlannerConfig& cfg) {
  const int m = static_cast<int>(in.robots.size());
  const int hz = cfg.horizon;
  const int p = 2 * hz;
  if (in.graph == nullptr || in.graph->num_vertices() != m) {
    throw PreconditionError("plan_round: graph does not match robots");
  }
  if (static_cast<int>(in.datasets.size()) != m || static_cast<int>(in.preserved.size()) != m) {
    throw PreconditionError("plan_round: one dataset and one preserved set per robot required");
  }
  if (static_cast<int>(in.prediction_times.size()) != hz) {
    throw PreconditionError("plan_round: prediction_times must have horizon entries");
  }
  if (!swarm::is_connected(*in.graph)) throw PreconditionError("plan_round: graph not connected");
  const auto& graph = *in.graph;

  QpOptions qp_opts;
  qp_opts.max_iters = cfg.qp_max_iters;
  qp_opts.tol = cfg.qp_tol;

  // Local models, built once per round at the stay-put anchor.
  std::vector<LocalQp> qps;
  std::vector<Eigen::VectorXd> linear(m);
  qps.reserve(m);
  for (int i = 0; i < m; ++i) {
    const auto& nbrs = graph.neighbors(i);
    const int blocks = 1 + static_cast<int>(nbrs.size());
    Eigen::VectorXd anchor(p * blocks);
    anchor.head(p) = detail::stay_put(in.robots[i].position, hz);
    std::vector<SpaceTimePoint<2>> query;
    query.reserve(hz * blocks);
    auto add_block = [&](const Point2& pos) {
      for (int h = 0; h < hz; ++h) query.push_back({pos, in.prediction_times[h]});
    };
    add_block(in.robots[i].position);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      anchor.segment(p * (1 + k), p) = detail::stay_put(in.robots[nbrs[k]].position, hz);
      add_block(in.robots[nbrs[k]].position);
    }

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(anchor.size());
    double f_value = 0.0;
    if (!in.datasets[i].empty()) {
      const auto vg = gp::neg_logdet_and_grad<2>(in.datasets[i], query, in.hyperparams);
      grad = vg.grad;
      f_value = vg.value;
    }
    linear[i] = convex_model(grad, anchor, cfg.q, f_value).linear;

    LocalConstraints cons;
    cons.workspace = in.workspace;
    cons.model = swarm::linearize(in.robots[i], in.tau);
    cons.current_position = in.robots[i].position;
    cons.dv_max = in.robots[i].delta_v_max;
    cons.dtheta_max = in.robots[i].delta_theta_max;
    cons.speed = in.robots[i].speed;
    cons.speed_max = in.robots[i].speed_max;
    cons.radius = graph.radius() - cfg.ball_margin;
    cons.horizon = hz;
    cons.neighbors = nbrs;
    cons.preserved = in.preserved[i];
    for (int j : cons.preserved) {
      const double d = (in.robots[i].position - in.robots[j].position).norm();
      cons.preserved_radius.push_back(std::max(cons.radius, d));
    }
    std::vector<NeighborRef> refs;
    for (int j : nbrs) refs.push_back({j, detail::stay_put(in.robots[j].position, hz), false});
    qps.emplace_back(std::move(cons), cfg.q, std::move(refs), qp_opts);
  }

  // lambda[i][j] = lambda_ij
  std::vector<std::map<int, Eigen::VectorXd>> lambda(m);
  for (int i = 0; i < m; ++i) {
    for (int j : graph.neighbors(i)) lambda[i][j] = Eigen::VectorXd::Zero(p);
  }

  using VecMessage = netsim::Message<Eigen::VectorXd>;
  RoundResult out;
  std::vector<QpResult> current(m), best;
  double best_residual = std::numeric_limits<double>::infinity();

  for (int n = 1; n <= cfg.n_max; ++n) {
    // Multipliers to neighbors: robot j needs lambda_ij to price its copy of i.
    std::vector<std::vector<VecMessage>> outbox(m);
    for (int i = 0; i < m; ++i) {
      for (const auto& [j, l] : lambda[i]) outbox[i].push_back({i, j, in.step, l});
    }
    const auto lambda_in = netsim::exchange_round(graph, outbox);

    for (int i = 0; i < m; ++i) {
      const auto& nbrs = graph.neighbors(i);
      Eigen::VectorXd offset = Eigen::VectorXd::Zero(p * (1 + nbrs.size()));
      for (const auto& [j, l] : lambda[i]) offset.head(p) -= l;
      for (const auto& msg : lambda_in[i]) {
        const auto k = std::find(nbrs.begin(), nbrs.end(), msg.sender) - nbrs.begin();
        offset.segment(p * (1 + k), p) += msg.payload;
      }
      current[i] = qps[i].solve(linear[i], offset);
      if (!current[i].converged) ++out.inexact_qp_solves;
    }

    // Copies back to their owners: robot i needs zeta_ji from each neighbor j.
    for (auto& box : outbox) box.clear();
    for (int j = 0; j < m; ++j) {
      const auto& nbrs = graph.neighbors(j);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        outbox[j].push_back({j, nbrs[k], in.step, current[j].zeta.segment(p * (1 + k), p)});
      }
    }
    const auto zeta_in = netsim::exchange_round(graph, outbox);

    const double alpha = cfg.alpha0 / std::sqrt(static_cast<double>(n));
    double residual = 0.0;
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd own = current[i].zeta.head(p);
      for (const auto& msg : zeta_in[i]) {
        residual = std::max(residual, (own - msg.payload).norm());
        lambda[i][msg.sender] = dual_update(lambda[i][msg.sender], own, msg.payload, alpha);
      }
    }
    out.residual_history.push_back(residual);
    out.iterations = n;
    if (residual < best_residual) {
      best_residual = residual;
      best = current;
    }
    if (residual < cfg.epsilon) break;
  }

  out.residual = best_residual;
  out.consensus_failed = !(best_residual < cfg.epsilon);
  out.plans.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto& nbrs = graph.neighbors(i);
    PathPlan& plan = out.plans[i];
    plan.owner = i;
    plan.horizon = hz;
    plan.prediction_times = in.prediction_times;
    plan.controls = best[i].controls;
    plan.zeta[i] = best[i].zeta.head(p);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      plan.zeta[nbrs[k]] = best[i].zeta.segment(p * (1 + k), p);
    }
  }
  return out;
}

}  // namespace stipp::planner

#endif  // STIPP_PLANNER_CONSENSUS_HPP

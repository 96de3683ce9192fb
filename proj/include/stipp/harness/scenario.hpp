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

// The experiment loop. Per step k, at dataset time t_k = k * T / steps:
//
//   1. build G_k from the current positions and record connectivity,
//   2. every robot measures the ground truth at (p_i, t_k), ids ascending,
//   3. every robot fuses its neighbors' step k-1 datasets and its new triple,
//   4. robot 1's model is scored at the test points (and snapshot grids),
//   5. preserve sets, one planning round, and the first planned control is
//      executed by every robot.
//
// Robots move by the unicycle Euler step. A safety filter runs before
// motion: any preserved pair whose next positions would be more than R apart
// holds both robots in place.

#ifndef STIPP_HARNESS_SCENARIO_HPP
#define STIPP_HARNESS_SCENARIO_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "stipp/errors.hpp"
#include "stipp/gp.hpp"
#include "stipp/harness/config.hpp"
#include "stipp/harness/data.hpp"
#include "stipp/harness/format.hpp"
#include "stipp/harness/stats.hpp"
#include "stipp/netsim.hpp"
#include "stipp/planner/consensus.hpp"
#include "stipp/swarm.hpp"

namespace stipp::harness {

inline constexpr const char* kVersion = "0.1.0";

struct TrajectoryRow {
  int step = 0;
  int robot = 0;  // 1-based id
  Point2 position;
  double speed = 0.0, heading = 0.0;
  double dv = 0.0, dtheta = 0.0;
  bool held = false;  // stopped by the safety filter
  Point2 next;
  // Distance between the executed position and the planned first waypoint.
  double model_gap = 0.0;
};

struct ConnectivityRow {
  int step = 0;
  bool connected = true;
  std::vector<std::pair<int, int>> edges;  // 1-based ids
};

struct ConsensusRow {
  int step = 0;
  int iterations = 0;
  double residual = 0.0;
  bool failed = false;
  int inexact_qp_solves = 0;
  int safety_holds = 0;
};

struct UncertaintyRow {
  int step = 0;
  std::vector<double> std_dev;  // per test point
  BoxStats box;
};

struct GridRow {
  Point2 p;
  double mean = 0.0, std_dev = 0.0;
};

struct GridSnapshot {
  int step = 0;
  double time = 0.0;
  std::vector<GridRow> ground_truth;
  std::vector<GridRow> prediction;
};

struct RunArtifacts {
  ScenarioConfig config;
  std::string dataset_source;
  std::size_t dataset_rows = 0;
  std::size_t dataset_sensors = 0;
  double time_span = 0.0;
  double prior_mean = 0.0;
  Hyperparams hyperparams;
  std::vector<TrajectoryRow> trajectories;
  std::vector<ConnectivityRow> connectivity;
  std::vector<ConsensusRow> consensus;
  std::vector<UncertaintyRow> uncertainty;
  std::vector<GridSnapshot> snapshots;
  std::vector<std::string> warnings;  // consensus failures and planner errors

  int consensus_failures() const {
    return static_cast<int>(std::count_if(consensus.begin(), consensus.end(),
                                          [](const ConsensusRow& r) { return r.failed; }));
  }
  bool always_connected() const {
    return std::all_of(connectivity.begin(), connectivity.end(),
                       [](const ConnectivityRow& r) { return r.connected; });
  }
};

// Uniform grid over the workspace, rows by y then x, both ascending.
inline std::vector<Point2> grid_points(const Workspace& q, double resolution) {
  if (!(resolution > 0.0)) throw PreconditionError("grid_points: resolution must be positive");
  const Point2 extent = q.hi - q.lo;
  const int nx = static_cast<int>(std::floor(extent.x() / resolution + 1e-9)) + 1;
  const int ny = static_cast<int>(std::floor(extent.y() / resolution + 1e-9)) + 1;
  std::vector<Point2> out;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) out.emplace_back(q.lo.x() + ix * resolution, q.lo.y() + iy * resolution);
  return out;
}

inline std::vector<GridRow> to_grid_rows(const std::vector<Point2>& pts, const Posterior& post) {
  const Eigen::VectorXd sd = post.std_dev();
  std::vector<GridRow> rows;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    rows.push_back({pts[a], post.mean[static_cast<Eigen::Index>(a)], sd[static_cast<Eigen::Index>(a)]});
  }
  return rows;
}

inline void export_grid(std::ostream& os, const std::vector<GridRow>& rows) {
  os << "x,y,mean,std\n";
  for (const auto& r : rows) {
    os << fmt(r.p.x()) << "," << fmt(r.p.y()) << "," << fmt(r.mean) << "," << fmt(r.std_dev) << "\n";
  }
}

namespace detail {

inline std::vector<SpaceTimePoint<2>> at_time(const std::vector<Point2>& pts, double t) {
  std::vector<SpaceTimePoint<2>> out;
  for (const auto& p : pts) out.push_back({p, t});
  return out;
}

// Prior when the dataset is empty.
inline Posterior model_at(const Dataset2& d, const std::vector<SpaceTimePoint<2>>& q,
                          const Hyperparams& h, double prior_mean) {
  if (!d.empty()) return gp::posterior<2>(d, q, h, prior_mean);
  Posterior p;
  p.mean = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(q.size()), prior_mean);
  p.cov = kernel::gram<2>(q, h, false);
  return p;
}

// Control that stops the robot in one step when |speed| <= delta_v_max.
inline Eigen::Vector2d brake(const swarm::RobotState& r) {
  return {std::clamp(-r.speed, -r.delta_v_max, r.delta_v_max), 0.0};
}

inline std::string dump_state(int step, const std::vector<swarm::RobotState>& robots,
                              const swarm::CommGraph& g) {
  std::ostringstream os;
  os << "step " << step << " state:";
  for (const auto& r : robots) {
    os << " robot " << r.id << " at (" << fmt(r.position.x()) << ", " << fmt(r.position.y())
       << ") v=" << fmt(r.speed) << " theta=" << fmt(r.heading) << ";";
  }
  os << " edges:";
  for (auto [a, b] : g.edges()) os << " " << a + 1 << "-" << b + 1;
  return os.str();
}

}  // namespace detail

struct LoadedData {
  IngestResult data;
  std::string source;
};

inline LoadedData load_dataset(const ScenarioConfig& cfg) {
  if (!cfg.dataset_path.empty()) return {ingest_csv(cfg.dataset_path), cfg.dataset_path};
  return {synth_field(cfg.synth, cfg.workspace, cfg.synth.seed.value_or(cfg.seed)), "synthetic"};
}

inline RunArtifacts run_scenario(const ScenarioConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  RunArtifacts art;
  art.config = cfg;

  const LoadedData loaded = load_dataset(cfg);
  const Dataset2& field = loaded.data.data;
  art.dataset_source = loaded.source;
  art.dataset_rows = field.size();
  art.dataset_sensors = loaded.data.sensor_names.size();
  art.time_span = *std::max_element(field.timestamps.begin(), field.timestamps.end());
  if (!(art.time_span > 0.0)) throw PreconditionError("run_scenario: dataset spans zero time");
  art.prior_mean = cfg.prior_mean.value_or(field.mean_value());
  art.hyperparams = cfg.hyperparams;
  if (cfg.fit_hyperparams) {
    const auto grid = cfg.grid.expand();
    art.hyperparams = gp::fit_hyperparams(field, std::span<const Hyperparams>(grid), art.prior_mean);
  }
  const Hyperparams& h = art.hyperparams;
  netsim::GroundTruth gt(field, h, art.prior_mean, cfg.noise_std, cfg.workspace, cfg.seed);

  const int m = cfg.num_robots;
  const double dt = art.time_span / cfg.steps;
  std::vector<swarm::RobotState> robots(m);
  const auto poses = cfg.resolved_poses();
  for (int i = 0; i < m; ++i) {
    robots[i].id = i + 1;
    robots[i].position = poses[i].position;
    robots[i].heading = swarm::wrap_angle(poses[i].heading);
    robots[i].speed = poses[i].speed;
    robots[i].delta_v_max = cfg.delta_v_max;
    robots[i].delta_theta_max = cfg.delta_theta_max;
    robots[i].speed_max = cfg.speed_max;
  }
  std::vector<Dataset2> datasets(m);
  const std::vector<Point2> snapshot_grid = grid_points(cfg.workspace, cfg.grid_resolution);

  for (int k = 0; k < cfg.steps; ++k) {
    const int step = k + 1;
    const double t = k * dt;
    std::vector<Point2> pos(m);
    for (int i = 0; i < m; ++i) pos[i] = robots[i].position;
    const swarm::CommGraph graph = swarm::build_graph(pos, cfg.radius);

    ConnectivityRow conn;
    conn.step = step;
    conn.connected = swarm::is_connected(graph);
    for (auto [a, b] : graph.edges()) conn.edges.emplace_back(a + 1, b + 1);
    art.connectivity.push_back(conn);
    if (!conn.connected) {
      throw ConnectivityError("communication graph disconnected; " +
                              detail::dump_state(step, robots, graph));
    }

    // Measure in ascending id order, then fuse last step's neighbor data.
    std::vector<netsim::Triple> fresh(m);
    for (int i = 0; i < m; ++i) {
      fresh[i] = {robots[i].position, t, netsim::measure(gt, robots[i].position, t), {robots[i].id, k}};
    }
    const std::vector<Dataset2> previous = datasets;
    for (int i = 0; i < m; ++i) {
      std::vector<Dataset2> nbrs;
      for (int j : graph.neighbors(i)) nbrs.push_back(previous[j]);
      datasets[i] = netsim::cap_dataset(netsim::fuse_datasets(previous[i], nbrs, fresh[i]), cfg.max_points);
    }

    // Robot 1's model at the test points.
    UncertaintyRow unc;
    unc.step = step;
    const Eigen::VectorXd sd =
        detail::model_at(datasets[0], detail::at_time(cfg.test_points, t), h, art.prior_mean).std_dev();
    unc.std_dev.assign(sd.data(), sd.data() + sd.size());
    unc.box = box_stats(unc.std_dev);
    art.uncertainty.push_back(std::move(unc));

    if (std::find(cfg.snapshot_steps.begin(), cfg.snapshot_steps.end(), step) != cfg.snapshot_steps.end()) {
      const auto q = detail::at_time(snapshot_grid, t);
      GridSnapshot snap;
      snap.step = step;
      snap.time = t;
      snap.ground_truth = to_grid_rows(snapshot_grid, gt.predict(q));
      snap.prediction = to_grid_rows(snapshot_grid, detail::model_at(datasets[0], q, h, art.prior_mean));
      art.snapshots.push_back(std::move(snap));
    }

    // Plan.
    std::vector<std::vector<int>> preserved(m);
    for (int i = 0; i < m; ++i) preserved[i] = swarm::preserve_set(i, graph, pos);
    planner::RoundInput in;
    in.robots = robots;
    in.datasets = datasets;
    in.graph = &graph;
    in.preserved = preserved;
    in.hyperparams = h;
    in.workspace = cfg.workspace;
    in.tau = cfg.tau;
    in.step = step;
    for (int hh = 1; hh <= cfg.planner.horizon; ++hh) in.prediction_times.push_back((k + hh) * dt);

    ConsensusRow cons;
    cons.step = step;
    // Default to braking; replaced by the planned first control.
    std::vector<Eigen::Vector2d> controls(m);
    std::vector<Point2> planned(m);
    for (int i = 0; i < m; ++i) {
      controls[i] = detail::brake(robots[i]);
      planned[i] = robots[i].position;
    }
    try {
      const planner::RoundResult round = planner::plan_round(in, cfg.planner);
      cons.iterations = round.iterations;
      cons.residual = round.residual;
      cons.failed = round.consensus_failed;
      cons.inexact_qp_solves = round.inexact_qp_solves;
      for (int i = 0; i < m; ++i) {
        controls[i] = round.plans[i].controls.head<2>();
        planned[i] = round.plans[i].waypoint(i, 0);
      }
      if (round.consensus_failed) {
        art.warnings.push_back("step " + std::to_string(step) + ": consensus not reached after " +
                               std::to_string(round.iterations) + " iterations, residual " +
                               fmt(round.residual) + "; executing best iterate");
      }
    } catch (const Error& e) {
      cons.failed = true;
      art.warnings.push_back("step " + std::to_string(step) + ": planner error, all robots brake: " +
                             e.what());
    }
    if (log != nullptr && cons.failed) *log << art.warnings.back() << "\n";

    // Candidate motion and the safety filter. A held robot brakes to a stop,
    // which keeps it exactly in place because |speed| <= delta_v_max.
    std::vector<swarm::RobotState> next(m);
    std::vector<char> held(m, 0);
    auto propose = [&](int i) {
      if (held[i]) controls[i] = detail::brake(robots[i]);
      next[i] = swarm::step_dynamics(robots[i], controls[i][0], controls[i][1], cfg.tau);
      next[i].position = cfg.workspace.clamp(next[i].position);
    };
    for (int i = 0; i < m; ++i) propose(i);
    for (bool changed = true; changed;) {
      changed = false;
      for (int i = 0; i < m; ++i) {
        for (int j : preserved[i]) {
          if ((next[i].position - next[j].position).norm() <= cfg.radius) continue;
          for (int r : {i, j}) {
            if (!held[r]) {
              held[r] = 1;
              propose(r);
              changed = true;
            }
          }
        }
      }
    }
    for (int i = 0; i < m; ++i) cons.safety_holds += held[i];
    if (log != nullptr && cons.safety_holds > 0) {
      *log << "step " << step << ": safety filter held " << cons.safety_holds << " robot(s)\n";
    }
    art.consensus.push_back(cons);

    for (int i = 0; i < m; ++i) {
      TrajectoryRow row;
      row.step = step;
      row.robot = robots[i].id;
      row.position = robots[i].position;
      row.speed = robots[i].speed;
      row.heading = robots[i].heading;
      row.dv = controls[i][0];
      row.dtheta = controls[i][1];
      row.held = held[i] != 0;
      row.next = next[i].position;
      row.model_gap = held[i] ? 0.0 : (next[i].position - planned[i]).norm();
      art.trajectories.push_back(row);
    }
    robots = next;
  }

  std::vector<Point2> final_pos(m);
  for (int i = 0; i < m; ++i) final_pos[i] = robots[i].position;
  const swarm::CommGraph final_graph = swarm::build_graph(final_pos, cfg.radius);
  if (!swarm::is_connected(final_graph)) {
    throw ConnectivityError("communication graph disconnected after the last move; " +
                            detail::dump_state(cfg.steps + 1, robots, final_graph));
  }
  return art;
}

inline nlohmann::json config_json(const ScenarioConfig& c) {
  using nlohmann::json;
  json poses = json::array();
  for (const auto& p : c.resolved_poses()) {
    poses.push_back({{"x", p.position.x()}, {"y", p.position.y()}, {"heading", p.heading}, {"speed", p.speed}});
  }
  json tests = json::array();
  for (const auto& p : c.test_points) tests.push_back({p.x(), p.y()});
  json j;
  j["scenario"] = {{"num_robots", c.num_robots}, {"radius", c.radius},   {"tau", c.tau},
                   {"steps", c.steps},           {"seed", c.seed},       {"noise_std", c.noise_std},
                   {"max_points", c.max_points}};
  j["workspace"] = {{"x_min", c.workspace.lo.x()}, {"x_max", c.workspace.hi.x()},
                    {"y_min", c.workspace.lo.y()}, {"y_max", c.workspace.hi.y()}};
  j["gp"] = {{"sigma2", c.hyperparams.sigma2}, {"ell_s", c.hyperparams.ell_s},
             {"ell_t", c.hyperparams.ell_t},   {"noise_var", c.hyperparams.noise_var},
             {"fit", c.fit_hyperparams}};
  j["gp"]["prior_mean"] = c.prior_mean ? json(*c.prior_mean) : json("auto");
  j["planner"] = {{"horizon", c.planner.horizon},           {"q", c.planner.q},
                  {"alpha0", c.planner.alpha0},             {"epsilon", c.planner.epsilon},
                  {"n_max", c.planner.n_max},               {"qp_max_iters", c.planner.qp_max_iters},
                  {"qp_tol", c.planner.qp_tol},             {"ball_margin", c.planner.ball_margin}};
  j["robots"] = {{"initial", poses},
                 {"delta_v_max", c.delta_v_max},
                 {"delta_theta_max", c.delta_theta_max},
                 {"speed_max", c.speed_max}};
  j["test_points"] = tests;
  j["data"] = {{"dataset_path", c.dataset_path},
               {"synth_sensors_x", c.synth.sensors_x},
               {"synth_sensors_y", c.synth.sensors_y},
               {"synth_times", c.synth.num_times},
               {"synth_duration", c.synth.duration},
               {"synth_sigma2", c.synth.hyperparams.sigma2},
               {"synth_ell_s", c.synth.hyperparams.ell_s},
               {"synth_ell_t", c.synth.hyperparams.ell_t},
               {"synth_noise_var", c.synth.hyperparams.noise_var},
               {"synth_mean", c.synth.mean},
               {"synth_seed", c.synth.seed.value_or(c.seed)}};
  j["output"] = {{"snapshot_steps", c.snapshot_steps}, {"grid_resolution", c.grid_resolution}};
  return j;
}

inline nlohmann::json run_meta(const RunArtifacts& a) {
  nlohmann::json j;
  j["config"] = config_json(a.config);
  j["seed"] = a.config.seed;
  j["versions"] = {{"stipp", kVersion},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                 "." + std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"compiler", __VERSION__}};
  j["dataset"] = {{"source", a.dataset_source},
                  {"rows", a.dataset_rows},
                  {"sensors", a.dataset_sensors},
                  {"time_span_s", a.time_span},
                  {"prior_mean", a.prior_mean}};
  j["hyperparams"] = {{"sigma2", a.hyperparams.sigma2},
                      {"ell_s", a.hyperparams.ell_s},
                      {"ell_t", a.hyperparams.ell_t},
                      {"noise_var", a.hyperparams.noise_var}};
  j["summary"] = {{"steps", a.connectivity.size()},
                  {"always_connected", a.always_connected()},
                  {"consensus_failures", a.consensus_failures()}};
  j["warnings"] = a.warnings;
  return j;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.close();
  if (!out) throw Error("cannot write " + path.string());
}

// Writes every artifact file into `dir`, creating it if needed.
inline void write_artifacts(const RunArtifacts& a, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::ostringstream traj;
  traj << "step,robot,x_m,y_m,speed,heading,dv,dtheta,held,next_x_m,next_y_m,model_gap_m\n";
  for (const auto& r : a.trajectories) {
    traj << r.step << "," << r.robot << "," << fmt(r.position.x()) << "," << fmt(r.position.y()) << ","
         << fmt(r.speed) << "," << fmt(r.heading) << "," << fmt(r.dv) << "," << fmt(r.dtheta) << ","
         << (r.held ? 1 : 0) << "," << fmt(r.next.x()) << "," << fmt(r.next.y()) << ","
         << fmt(r.model_gap) << "\n";
  }
  write_file(dir / "trajectories.csv", traj.str());

  std::ostringstream conn;
  conn << "step,connected,num_edges,edges\n";
  for (const auto& r : a.connectivity) {
    conn << r.step << "," << (r.connected ? 1 : 0) << "," << r.edges.size() << ",";
    for (std::size_t e = 0; e < r.edges.size(); ++e) {
      conn << (e ? " " : "") << r.edges[e].first << "-" << r.edges[e].second;
    }
    conn << "\n";
  }
  write_file(dir / "connectivity.csv", conn.str());

  std::ostringstream cons;
  cons << "step,iterations,residual,consensus_failed,inexact_qp_solves,safety_holds\n";
  for (const auto& r : a.consensus) {
    cons << r.step << "," << r.iterations << "," << fmt(r.residual) << "," << (r.failed ? 1 : 0) << ","
         << r.inexact_qp_solves << "," << r.safety_holds << "\n";
  }
  write_file(dir / "consensus.csv", cons.str());

  std::ostringstream unc;
  unc << "step";
  for (std::size_t p = 0; p < a.config.test_points.size(); ++p) unc << ",std_" << p;
  unc << ",min,q1,median,q3,max,whisker_lo,whisker_hi,n_outliers\n";
  for (const auto& r : a.uncertainty) {
    unc << r.step;
    for (double s : r.std_dev) unc << "," << fmt(s);
    const BoxStats& b = r.box;
    unc << "," << fmt(b.min) << "," << fmt(b.q1) << "," << fmt(b.median) << "," << fmt(b.q3) << ","
        << fmt(b.max) << "," << fmt(b.whisker_lo) << "," << fmt(b.whisker_hi) << "," << b.n_outliers << "\n";
  }
  write_file(dir / "uncertainty_stats.csv", unc.str());

  for (const auto& s : a.snapshots) {
    std::ostringstream gt, pred;
    export_grid(gt, s.ground_truth);
    export_grid(pred, s.prediction);
    write_file(dir / ("grid_gt_step" + std::to_string(s.step) + ".csv"), gt.str());
    write_file(dir / ("grid_pred_step" + std::to_string(s.step) + ".csv"), pred.str());
  }

  write_file(dir / "run_meta.json", run_meta(a).dump(2) + "\n");
}

}  // namespace stipp::harness

#endif  // STIPP_HARNESS_SCENARIO_HPP

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

// Scenario configuration and its INI loader. Every key is optional and
// falls back to the default scenario; unknown sections and keys are errors.

#ifndef STIPP_HARNESS_CONFIG_HPP
#define STIPP_HARNESS_CONFIG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "stipp/errors.hpp"
#include "stipp/kernel.hpp"
#include "stipp/planner/consensus.hpp"
#include "stipp/swarm.hpp"

namespace stipp::harness {

struct InitialPose {
  Point2 position = Point2::Zero();
  double heading = 0.0;
  double speed = 0.0;
};

// Sensor grid x time grid sampled from the GP prior when no dataset file is
// given.
struct SynthConfig {
  int sensors_x = 6;
  int sensors_y = 2;
  int num_times = 63;
  double duration = 86400.0;  // [s]
  Hyperparams hyperparams{4.0, 25.0, 43200.0, 0.01};
  double mean = 20.0;
  std::optional<std::uint64_t> seed;  // run seed when unset
};

struct HyperparamGrid {
  std::vector<double> sigma2, ell_s, ell_t, noise_var;

  std::vector<Hyperparams> expand() const {
    std::vector<Hyperparams> out;
    for (double a : sigma2)
      for (double b : ell_s)
        for (double c : ell_t)
          for (double d : noise_var) out.push_back({a, b, c, d});
    return out;
  }
};

struct ScenarioConfig {
  int num_robots = 6;
  double radius = 20.0;
  Workspace workspace{Point2(0.0, -20.0), Point2(100.0, 0.0)};
  double tau = 1.0;
  int steps = 80;
  std::uint64_t seed = 1;
  double noise_std = 0.1;
  std::size_t max_points = 0;  // per-robot dataset cap, 0 = unlimited

  Hyperparams hyperparams{4.0, 25.0, 43200.0, 0.01};
  std::optional<double> prior_mean;  // dataset mean when unset
  bool fit_hyperparams = false;
  HyperparamGrid grid;

  planner::PlannerConfig planner;

  std::vector<InitialPose> initial_poses;  // line formation when empty
  double delta_v_max = 1.0;
  double delta_theta_max = 1.0;
  // Must not exceed delta_v_max so that every robot can stop in one step.
  double speed_max = 1.0;

  std::vector<Point2> test_points = default_test_points();
  std::string dataset_path;  // empty: synthesize
  SynthConfig synth;

  std::vector<int> snapshot_steps{1, 20, 40, 80};  // steps past the run are skipped
  double grid_resolution = 2.5;  // [m]

  // Line near the top-left corner, 10 m apart, heading along +x.
  std::vector<InitialPose> resolved_poses() const {
    if (!initial_poses.empty()) return initial_poses;
    std::vector<InitialPose> out;
    const double y = std::max(workspace.lo.y(), workspace.hi.y() - 5.0);
    for (int i = 0; i < num_robots; ++i) {
      out.push_back({Point2(workspace.lo.x() + 5.0 + 10.0 * i, y), 0.0, 0.0});
    }
    return out;
  }

  static std::vector<Point2> default_test_points() {
    std::vector<Point2> out;
    for (double y : {0.0, -5.0, -10.0})
      for (int x = 20; x <= 80; x += 10) out.emplace_back(x, y);
    return out;
  }

  void validate() const {
    if (num_robots < 1) throw PreconditionError("config: num_robots must be >= 1");
    if (steps < 1) throw PreconditionError("config: steps must be >= 1");
    if (planner.horizon < 1) throw PreconditionError("config: horizon must be >= 1");
    if (!(radius > 0.0) || !(tau > 0.0)) throw PreconditionError("config: radius and tau must be positive");
    if (!workspace.valid()) throw PreconditionError("config: empty workspace");
    if (!(noise_std >= 0.0)) throw PreconditionError("config: noise_std must be >= 0");
    if (!(delta_v_max > 0.0) || !(delta_theta_max > 0.0)) {
      throw PreconditionError("config: control bounds must be positive");
    }
    if (!(speed_max >= 0.0) || speed_max > delta_v_max) {
      throw PreconditionError("config: speed_max must lie in [0, delta_v_max]");
    }
    if (!(planner.q > 0.0) || !(planner.alpha0 > 0.0) || !(planner.epsilon > 0.0) || planner.n_max < 1) {
      throw PreconditionError("config: planner q, alpha0, epsilon and n_max must be positive");
    }
    if (!(planner.ball_margin >= 0.0) || planner.ball_margin >= radius) {
      throw PreconditionError("config: ball_margin must lie in [0, radius)");
    }
    for (int k : snapshot_steps) {
      if (k < 1) throw PreconditionError("config: snapshot steps start at 1");
    }
    if (!(grid_resolution > 0.0)) throw PreconditionError("config: grid_resolution must be positive");
    hyperparams.validate();
    if (fit_hyperparams && grid.expand().empty()) {
      throw PreconditionError("config: fit = true needs non-empty grid_* lists");
    }
    const auto poses = resolved_poses();
    if (static_cast<int>(poses.size()) != num_robots) {
      throw PreconditionError("config: initial pose count differs from num_robots");
    }
    std::vector<Point2> pos;
    for (const auto& p : poses) {
      if (!workspace.contains(p.position)) {
        throw PreconditionError("config: initial pose outside workspace");
      }
      if (!(std::fabs(p.speed) <= speed_max)) {
        throw PreconditionError("config: initial speed exceeds speed_max");
      }
      pos.push_back(p.position);
    }
    if (!swarm::is_connected(swarm::build_graph(pos, radius))) {
      throw PreconditionError("config: initial communication graph is not connected");
    }
    if (test_points.empty()) throw PreconditionError("config: no test points");
    for (const auto& p : test_points) {
      if (!workspace.contains(p)) throw PreconditionError("config: test point outside workspace");
    }
    if (synth.sensors_x < 1 || synth.sensors_y < 1 || synth.num_times < 1 || !(synth.duration > 0.0)) {
      throw PreconditionError("config: synthetic grid must be non-empty");
    }
    synth.hyperparams.validate();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: key '" + key + "' expects a number, got '" + text + "'");
  }
}

inline std::vector<double> to_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(to_double(key, item));
  return out;
}

inline long long to_integer(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v != static_cast<double>(static_cast<long long>(v))) {
    throw ParseError("config: key '" + key + "' expects an integer, got '" + text + "'");
  }
  return static_cast<long long>(v);
}

inline bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError("config: key '" + key + "' expects true or false, got '" + text + "'");
}

inline const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"scenario", {"num_robots", "radius", "tau", "steps", "seed", "noise_std", "max_points"}},
      {"workspace", {"x_min", "x_max", "y_min", "y_max"}},
      {"gp",
       {"sigma2", "ell_s", "ell_t", "noise_var", "prior_mean", "fit", "grid_sigma2", "grid_ell_s",
        "grid_ell_t", "grid_noise_var"}},
      {"planner",
       {"horizon", "q", "alpha0", "epsilon", "n_max", "qp_max_iters", "qp_tol", "ball_margin"}},
      {"robots", {"initial", "delta_v_max", "delta_theta_max", "speed_max"}},
      {"test_points", {"x", "y"}},
      {"data",
       {"dataset_path", "synth_sensors_x", "synth_sensors_y", "synth_times", "synth_duration",
        "synth_sigma2", "synth_ell_s", "synth_ell_t", "synth_noise_var", "synth_mean", "synth_seed"}},
      {"output", {"snapshot_steps", "grid_resolution"}},
  };
  return keys;
}

}  // namespace detail

// Parses INI text. `base_dir` resolves a relative dataset_path.
inline ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  std::map<std::string, std::string> kv;
  for (const auto& [section, body] : tree) {
    const auto it = detail::known_keys().find(section);
    if (it == detail::known_keys().end()) {
      if (!body.data().empty()) throw ParseError("config: key '" + section + "' outside a section");
      throw ParseError("config: unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) {
        throw ParseError("config: unknown key '" + key + "' in [" + section + "]");
      }
      kv[section + "." + key] = detail::trim(value.data());
    }
  }
  auto get = [&](const std::string& k) -> std::optional<std::string> {
    const auto f = kv.find(k);
    if (f == kv.end()) return std::nullopt;
    return f->second;
  };
  auto num = [&](const std::string& k, auto& target) {
    if (auto v = get(k)) {
      using T = std::decay_t<decltype(target)>;
      if constexpr (std::is_floating_point_v<T>) {
        target = detail::to_double(k, *v);
      } else {
        const long long i = detail::to_integer(k, *v);
        if (std::is_unsigned_v<T> && i < 0) throw ParseError("config: key '" + k + "' must be >= 0");
        target = static_cast<T>(i);
      }
    }
  };

  ScenarioConfig c;
  num("scenario.num_robots", c.num_robots);
  num("scenario.radius", c.radius);
  num("scenario.tau", c.tau);
  num("scenario.steps", c.steps);
  num("scenario.seed", c.seed);
  num("scenario.noise_std", c.noise_std);
  num("scenario.max_points", c.max_points);

  num("workspace.x_min", c.workspace.lo.x());
  num("workspace.x_max", c.workspace.hi.x());
  num("workspace.y_min", c.workspace.lo.y());
  num("workspace.y_max", c.workspace.hi.y());

  num("gp.sigma2", c.hyperparams.sigma2);
  num("gp.ell_s", c.hyperparams.ell_s);
  num("gp.ell_t", c.hyperparams.ell_t);
  num("gp.noise_var", c.hyperparams.noise_var);
  if (auto v = get("gp.prior_mean"); v && *v != "auto") c.prior_mean = detail::to_double("gp.prior_mean", *v);
  if (auto v = get("gp.fit")) c.fit_hyperparams = detail::to_bool("gp.fit", *v);
  if (auto v = get("gp.grid_sigma2")) c.grid.sigma2 = detail::to_doubles("gp.grid_sigma2", *v);
  if (auto v = get("gp.grid_ell_s")) c.grid.ell_s = detail::to_doubles("gp.grid_ell_s", *v);
  if (auto v = get("gp.grid_ell_t")) c.grid.ell_t = detail::to_doubles("gp.grid_ell_t", *v);
  if (auto v = get("gp.grid_noise_var")) c.grid.noise_var = detail::to_doubles("gp.grid_noise_var", *v);

  num("planner.horizon", c.planner.horizon);
  num("planner.q", c.planner.q);
  num("planner.alpha0", c.planner.alpha0);
  num("planner.epsilon", c.planner.epsilon);
  num("planner.n_max", c.planner.n_max);
  num("planner.qp_max_iters", c.planner.qp_max_iters);
  num("planner.qp_tol", c.planner.qp_tol);
  num("planner.ball_margin", c.planner.ball_margin);

  // initial = x, y[, heading[, speed]]; x, y ...
  if (auto v = get("robots.initial")) {
    for (const auto& pose : detail::split(*v, ';')) {
      const auto f = detail::to_doubles("robots.initial", pose);
      if (f.size() < 2 || f.size() > 4) {
        throw ParseError("config: robots.initial entry '" + pose + "' needs 2 to 4 numbers");
      }
      c.initial_poses.push_back({Point2(f[0], f[1]), f.size() > 2 ? f[2] : 0.0, f.size() > 3 ? f[3] : 0.0});
    }
  }
  num("robots.delta_v_max", c.delta_v_max);
  num("robots.delta_theta_max", c.delta_theta_max);
  num("robots.speed_max", c.speed_max);

  const auto xs = get("test_points.x");
  const auto ys = get("test_points.y");
  if (xs.has_value() != ys.has_value()) throw ParseError("config: test_points needs both x and y");
  if (xs) {
    c.test_points.clear();
    for (double y : detail::to_doubles("test_points.y", *ys))
      for (double x : detail::to_doubles("test_points.x", *xs)) c.test_points.emplace_back(x, y);
  }

  if (auto v = get("data.dataset_path"); v && !v->empty()) {
    const std::filesystem::path p(*v);
    c.dataset_path = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
  }
  num("data.synth_sensors_x", c.synth.sensors_x);
  num("data.synth_sensors_y", c.synth.sensors_y);
  num("data.synth_times", c.synth.num_times);
  num("data.synth_duration", c.synth.duration);
  num("data.synth_sigma2", c.synth.hyperparams.sigma2);
  num("data.synth_ell_s", c.synth.hyperparams.ell_s);
  num("data.synth_ell_t", c.synth.hyperparams.ell_t);
  num("data.synth_noise_var", c.synth.hyperparams.noise_var);
  num("data.synth_mean", c.synth.mean);
  if (auto v = get("data.synth_seed")) {
    const long long s = detail::to_integer("data.synth_seed", *v);
    if (s < 0) throw ParseError("config: data.synth_seed must be >= 0");
    c.synth.seed = static_cast<std::uint64_t>(s);
  }

  if (auto v = get("output.snapshot_steps")) {
    c.snapshot_steps.clear();
    for (const auto& item : detail::split(*v, ',')) {
      c.snapshot_steps.push_back(static_cast<int>(detail::to_integer("output.snapshot_steps", item)));
    }
  }
  num("output.grid_resolution", c.grid_resolution);

  c.validate();
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path.string());
  return parse_config(in, path.parent_path());
}

}  // namespace stipp::harness

#endif  // STIPP_HARNESS_CONFIG_HPP

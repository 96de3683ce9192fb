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

// Sensor datasets: CSV ingestion, summary, and a synthetic GP-prior field.
//
// CSV schema, one header line then one record per line:
//   sensor_id,x_m,y_m,timestamp_s,value

#ifndef STIPP_HARNESS_DATA_HPP
#define STIPP_HARNESS_DATA_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stipp/errors.hpp"
#include "stipp/gp.hpp"
#include "stipp/harness/config.hpp"
#include "stipp/harness/format.hpp"

namespace stipp::harness {

inline constexpr const char* kCsvHeader = "sensor_id,x_m,y_m,timestamp_s,value";

struct IngestResult {
  Dataset2 data;
  // Sensor labels in order of first appearance; provenance source i is
  // sensor_names[i].
  std::vector<std::string> sensor_names;
  double time_origin = 0.0;  // earliest raw timestamp [s]
};

namespace detail {

inline double parse_field(const std::string& text, const char* name, int line) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    std::ostringstream os;
    os << "line " << line << ": field '" << name << "' is not a finite number: '" << t << "'";
    throw ParseError(os.str());
  }
  return v;
}

}  // namespace detail

// Timestamps are shifted so the earliest record is at 0 s. Provenance is
// (sensor index, row index) with rows counted from 0 after the header.
inline IngestResult parse_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw ParseError("dataset: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (detail::trim(line) != kCsvHeader) {
    throw ParseError("line " + std::to_string(line_no) + ": expected header '" + kCsvHeader +
                     "', got '" + line + "'");
  }

  IngestResult r;
  std::map<std::string, int> sensor_index;
  std::vector<double> raw_times;
  int row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 5) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                       std::to_string(f.size()));
    }
    const std::string sensor = detail::trim(f[0]);
    if (sensor.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty sensor_id");
    const double x = detail::parse_field(f[1], "x_m", line_no);
    const double y = detail::parse_field(f[2], "y_m", line_no);
    const double t = detail::parse_field(f[3], "timestamp_s", line_no);
    const double v = detail::parse_field(f[4], "value", line_no);
    auto [it, fresh] = sensor_index.emplace(sensor, static_cast<int>(r.sensor_names.size()));
    if (fresh) r.sensor_names.push_back(sensor);
    r.data.push_back(Point2(x, y), t, v, {it->second, row});
    raw_times.push_back(t);
    ++row;
  }
  if (r.data.empty()) throw ParseError("dataset: no records after the header");
  r.time_origin = *std::min_element(raw_times.begin(), raw_times.end());
  for (double& t : r.data.timestamps) t -= r.time_origin;
  r.data.validate();
  return r;
}

inline IngestResult ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("dataset: cannot open " + path.string());
  try {
    return parse_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

struct DatasetSummary {
  std::size_t rows = 0;
  std::size_t sensors = 0;
  std::size_t distinct_positions = 0;
  double time_span = 0.0;
  double value_min = 0.0, value_max = 0.0, value_mean = 0.0, value_std = 0.0;
  Point2 lo = Point2::Zero(), hi = Point2::Zero();
};

inline DatasetSummary summarize(const IngestResult& r) {
  const Dataset2& d = r.data;
  DatasetSummary s;
  s.rows = d.size();
  s.sensors = r.sensor_names.size();
  std::set<std::pair<double, double>> pos;
  for (const auto& p : d.positions) pos.emplace(p.x(), p.y());
  s.distinct_positions = pos.size();
  if (d.empty()) return s;
  s.time_span = *std::max_element(d.timestamps.begin(), d.timestamps.end()) -
                *std::min_element(d.timestamps.begin(), d.timestamps.end());
  const Eigen::VectorXd v = d.value_vector();
  s.value_min = v.minCoeff();
  s.value_max = v.maxCoeff();
  s.value_mean = v.mean();
  s.value_std = std::sqrt((v.array() - s.value_mean).square().mean());
  s.lo = s.hi = d.positions.front();
  for (const auto& p : d.positions) {
    s.lo = s.lo.cwiseMin(p);
    s.hi = s.hi.cwiseMax(p);
  }
  return s;
}

inline void write_summary(std::ostream& os, const DatasetSummary& s) {
  os << "rows: " << s.rows << "\n"
     << "sensors: " << s.sensors << "\n"
     << "distinct_positions: " << s.distinct_positions << "\n"
     << "time_span_s: " << fmt(s.time_span) << "\n"
     << "x_range_m: " << fmt(s.lo.x()) << " " << fmt(s.hi.x()) << "\n"
     << "y_range_m: " << fmt(s.lo.y()) << " " << fmt(s.hi.y()) << "\n"
     << "value_min: " << fmt(s.value_min) << "\n"
     << "value_max: " << fmt(s.value_max) << "\n"
     << "value_mean: " << fmt(s.value_mean) << "\n"
     << "value_std: " << fmt(s.value_std) << "\n";
}

// Sensors sit at the centers of a sensors_x x sensors_y grid over the
// workspace; each reports num_times times evenly spread over [0, duration].
// Values are one draw of the GP prior plus measurement noise.
inline IngestResult synth_field(const SynthConfig& cfg, const Workspace& q, std::uint64_t seed) {
  cfg.hyperparams.validate();
  const Point2 extent = q.hi - q.lo;
  std::vector<Point2> sensors;
  for (int r = 0; r < cfg.sensors_y; ++r) {
    for (int c = 0; c < cfg.sensors_x; ++c) {
      sensors.emplace_back(q.lo.x() + extent.x() * (c + 0.5) / cfg.sensors_x,
                           q.hi.y() - extent.y() * (r + 0.5) / cfg.sensors_y);
    }
  }
  std::vector<double> times;
  for (int k = 0; k < cfg.num_times; ++k) {
    times.push_back(cfg.num_times == 1 ? 0.0 : cfg.duration * k / (cfg.num_times - 1));
  }

  IngestResult r;
  std::vector<SpaceTimePoint<2>> pts;
  for (std::size_t s = 0; s < sensors.size(); ++s) r.sensor_names.push_back("S" + std::to_string(s + 1));
  int row = 0;
  for (double t : times) {
    for (std::size_t s = 0; s < sensors.size(); ++s) {
      pts.push_back({sensors[s], t});
      r.data.push_back(sensors[s], t, 0.0, {static_cast<int>(s), row++});
    }
  }
  const auto llt = factorize(kernel::gram<2>(std::span<const SpaceTimePoint<2>>(pts), cfg.hyperparams, true),
                             "synth_field");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd e(static_cast<Eigen::Index>(pts.size()));
  for (Eigen::Index a = 0; a < e.size(); ++a) e[a] = z(rng);
  const Eigen::VectorXd y = llt.matrixL() * e;
  for (Eigen::Index a = 0; a < e.size(); ++a) r.data.values[a] = cfg.mean + y[a];
  return r;
}

inline void write_csv(std::ostream& os, const IngestResult& r) {
  os << kCsvHeader << "\n";
  const Dataset2& d = r.data;
  for (std::size_t a = 0; a < d.size(); ++a) {
    os << r.sensor_names.at(d.provenance[a].source) << "," << fmt(d.positions[a].x()) << ","
       << fmt(d.positions[a].y()) << "," << fmt(d.timestamps[a] + r.time_origin) << ","
       << fmt(d.values[a]) << "\n";
  }
}

}  // namespace stipp::harness

#endif  // STIPP_HARNESS_DATA_HPP

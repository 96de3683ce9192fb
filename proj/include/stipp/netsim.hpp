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

// Simulated sensing and communication: a ground-truth GP that answers
// measurement queries, provenance-keyed dataset fusion, and synchronous
// loss-free message delivery along graph edges.

#ifndef STIPP_NETSIM_HPP
#define STIPP_NETSIM_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stipp/errors.hpp"
#include "stipp/gp.hpp"
#include "stipp/kernel.hpp"
#include "stipp/swarm.hpp"

namespace stipp::netsim {

class GroundTruth {
 public:
  GroundTruth(Dataset2 data, Hyperparams h, double prior_mean, double noise_std,
              Workspace workspace, std::uint64_t rng_seed)
      : data_(std::move(data)),
        h_(h),
        prior_mean_(prior_mean),
        noise_std_(noise_std),
        workspace_(workspace),
        rng_(rng_seed),
        points_(data_.points()),
        llt_(check_and_factorize()) {
    const Eigen::VectorXd resid =
        data_.value_vector() - Eigen::VectorXd::Constant(data_.size(), prior_mean_);
    weights_ = llt_.solve(resid);
  }

  const Dataset2& data() const { return data_; }
  const Hyperparams& hyperparams() const { return h_; }
  double prior_mean() const { return prior_mean_; }
  double noise_std() const { return noise_std_; }
  const Workspace& workspace() const { return workspace_; }

  // Noise-free posterior mean of the model.
  double mean_at(const Point2& p, double t) const {
    double m = prior_mean_;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      m += weights_[static_cast<Eigen::Index>(i)] *
           kernel::eval_kernel<2>(points_[i].p, p, points_[i].t, t, h_);
    }
    return m;
  }

  Posterior predict(std::span<const SpaceTimePoint<2>> query) const {
    const Eigen::MatrixXd kdh = kernel::cross_gram<2>(points_, query, h_);
    const Eigen::MatrixXd v = llt_.matrixL().solve(kdh);
    Posterior out;
    out.mean = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(query.size()), prior_mean_) +
               kdh.transpose() * weights_;
    out.cov = kernel::gram<2>(query, h_, false);
    out.cov.noalias() -= v.transpose() * v;
    return out;
  }

  double draw_noise() {
    if (noise_std_ == 0.0) return 0.0;
    return noise_std_ * normal_(rng_);
  }

 private:
  Eigen::LLT<Eigen::MatrixXd> check_and_factorize() const {
    if (data_.empty()) throw PreconditionError("GroundTruth: empty dataset");
    if (!(noise_std_ >= 0.0)) throw PreconditionError("GroundTruth: negative noise_std");
    if (!workspace_.valid()) throw PreconditionError("GroundTruth: empty workspace");
    h_.validate();
    data_.validate();
    return factorize(kernel::gram<2>(std::span<const SpaceTimePoint<2>>(points_), h_, true),
                     "GroundTruth");
  }

  Dataset2 data_;
  Hyperparams h_;
  double prior_mean_;
  double noise_std_;
  Workspace workspace_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::vector<SpaceTimePoint<2>> points_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd weights_;
};

// Ground-truth mean at (p, t) plus one noise draw from the model's generator.
inline double measure(GroundTruth& gt, const Point2& p, double t) {
  if (!gt.workspace().contains(p, 1e-9)) {
    std::ostringstream os;
    os << "measure: point (" << p.x() << ", " << p.y() << ") outside workspace";
    throw DomainError(os.str());
  }
  if (!(t >= 0.0)) throw DomainError("measure: negative time");
  return gt.mean_at(p, t) + gt.draw_noise();
}

struct Triple {
  Point2 position;
  double timestamp = 0.0;
  double value = 0.0;
  ProvenanceKey key;
};

namespace detail {

struct Record {
  Point2 position;
  double timestamp;
  double value;
};

inline bool same_record(const Record& a, const Record& b) {
  return a.position == b.position && a.timestamp == b.timestamp && a.value == b.value;
}

inline void insert_record(std::map<ProvenanceKey, Record>& into, const ProvenanceKey& key,
                          const Record& r) {
  auto [it, inserted] = into.emplace(key, r);
  if (!inserted && !same_record(it->second, r)) {
    std::ostringstream os;
    os << "fusion: conflicting records under provenance key (" << key.source << ", " << key.index
       << ")";
    throw IntegrityError(os.str());
  }
}

inline void insert_all(std::map<ProvenanceKey, Record>& into, const Dataset2& d) {
  for (std::size_t i = 0; i < d.size(); ++i) {
    insert_record(into, d.provenance[i], {d.positions[i], d.timestamps[i], d.values[i]});
  }
}

inline Dataset2 to_dataset(const std::map<ProvenanceKey, Record>& records) {
  Dataset2 out;
  for (const auto& [key, r] : records) out.push_back(r.position, r.timestamp, r.value, key);
  return out;
}

}  // namespace detail

// Provenance-keyed union. The result is sorted by key, so the operation is
// commutative, associative and idempotent.
inline Dataset2 union_datasets(const Dataset2& a, const Dataset2& b) {
  std::map<ProvenanceKey, detail::Record> records;
  detail::insert_all(records, a);
  detail::insert_all(records, b);
  return detail::to_dataset(records);
}

inline Dataset2 fuse_datasets(const Dataset2& own, std::span<const Dataset2> neighbors,
                              const std::optional<Triple>& fresh) {
  std::map<ProvenanceKey, detail::Record> records;
  detail::insert_all(records, own);
  for (const auto& d : neighbors) detail::insert_all(records, d);
  if (fresh) {
    if (records.contains(fresh->key)) {
      std::ostringstream os;
      os << "fuse_datasets: provenance key (" << fresh->key.source << ", " << fresh->key.index
         << ") already used";
      throw PreconditionError(os.str());
    }
    records.emplace(fresh->key, detail::Record{fresh->position, fresh->timestamp, fresh->value});
  }
  return detail::to_dataset(records);
}

// Keeps at most `max_points` records, dropping the oldest timestamps first
// (ties by provenance key). Zero means unlimited.
inline Dataset2 cap_dataset(const Dataset2& d, std::size_t max_points) {
  if (max_points == 0 || d.size() <= max_points) return d;
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (d.timestamps[a] != d.timestamps[b]) return d.timestamps[a] > d.timestamps[b];
    return d.provenance[a] > d.provenance[b];
  });
  order.resize(max_points);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return d.provenance[a] < d.provenance[b]; });
  Dataset2 out;
  for (auto i : order) out.push_back(d.positions[i], d.timestamps[i], d.values[i], d.provenance[i]);
  return out;
}

template <class Payload>
struct Message {
  int sender = 0;
  int recipient = -1;  // -1 broadcasts to every current neighbor
  int step = 0;
  Payload payload;
};

// outboxes[i] holds robot i's messages. A broadcast reaches every neighbor of
// the sender; an addressed message reaches its recipient only if that robot is
// a neighbor. Inboxes are filled in (sender, outbox order).
template <class Payload>
std::vector<std::vector<Message<Payload>>> exchange_round(
    const swarm::CommGraph& graph, const std::vector<std::vector<Message<Payload>>>& outboxes) {
  const int m = graph.num_vertices();
  if (static_cast<int>(outboxes.size()) > m) {
    throw PreconditionError("exchange_round: more outboxes than robots");
  }
  std::vector<std::vector<Message<Payload>>> inboxes(m);
  for (int s = 0; s < static_cast<int>(outboxes.size()); ++s) {
    for (const auto& msg : outboxes[s]) {
      if (msg.sender != s) throw PreconditionError("exchange_round: sender does not own outbox");
      if (msg.recipient < 0) {
        for (int n : graph.neighbors(s)) inboxes[n].push_back(msg);
      } else if (graph.has_edge(s, msg.recipient)) {
        inboxes[msg.recipient].push_back(msg);
      }
    }
  }
  return inboxes;
}

}  // namespace stipp::netsim

#endif  // STIPP_NETSIM_HPP

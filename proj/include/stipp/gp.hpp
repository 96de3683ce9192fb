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

// Exact Gaussian-process regression over space-time, plus the log-det
// entropy objective used by the planner.

#ifndef STIPP_GP_HPP
#define STIPP_GP_HPP

#include <cmath>
#include <compare>
#include <limits>
#include <numbers>
#include <set>
#include <span>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "stipp/errors.hpp"
#include "stipp/kernel.hpp"

namespace stipp {

// (source, index): robot id and step for robot measurements, sensor and row
// for ingested records.
struct ProvenanceKey {
  int source = 0;
  int index = 0;
  auto operator<=>(const ProvenanceKey&) const = default;
};

template <int Dim>
struct Dataset {
  std::vector<Point<Dim>> positions;
  std::vector<double> timestamps;
  std::vector<double> values;
  std::vector<ProvenanceKey> provenance;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }

  void push_back(const Point<Dim>& p, double t, double y, ProvenanceKey key) {
    positions.push_back(p);
    timestamps.push_back(t);
    values.push_back(y);
    provenance.push_back(key);
  }

  std::vector<SpaceTimePoint<Dim>> points() const {
    std::vector<SpaceTimePoint<Dim>> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = {positions[i], timestamps[i]};
    return out;
  }

  Eigen::VectorXd value_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(size()));
  }

  double mean_value() const {
    if (empty()) throw PreconditionError("Dataset::mean_value: empty dataset");
    return value_vector().mean();
  }

  void validate() const {
    const auto n = values.size();
    if (positions.size() != n || timestamps.size() != n || provenance.size() != n) {
      throw IntegrityError("Dataset: field lengths differ");
    }
    std::set<ProvenanceKey> seen;
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen.insert(provenance[i]).second) {
        std::ostringstream os;
        os << "Dataset: duplicate provenance key (" << provenance[i].source << ", "
           << provenance[i].index << ")";
        throw IntegrityError(os.str());
      }
      if (!(timestamps[i] >= 0.0)) throw IntegrityError("Dataset: negative timestamp");
    }
  }
};

using Dataset2 = Dataset<2>;

struct Posterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  Eigen::VectorXd std_dev() const { return cov.diagonal().cwiseMax(0.0).cwiseSqrt(); }
};

// Cholesky with kJitter on the diagonal; throws NumericError with the
// smallest diagonal entry when the matrix is not numerically PD.
inline Eigen::LLT<Eigen::MatrixXd> factorize(Eigen::MatrixXd k, const char* what) {
  k.diagonal().array() += kJitter;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << what << ": Cholesky failed (n=" << k.rows() << ", min diag=" << k.diagonal().minCoeff()
       << ", max diag=" << k.diagonal().maxCoeff() << ")";
    throw NumericError(os.str());
  }
  return llt;
}

inline double logdet_from_cholesky(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

namespace gp {

template <int Dim>
Posterior posterior(const Dataset<Dim>& train, std::span<const SpaceTimePoint<Dim>> query,
                    const Hyperparams& h, double prior_mean) {
  if (train.empty()) throw PreconditionError("posterior: empty training set");
  if (query.empty()) throw PreconditionError("posterior: empty query");
  h.validate();
  const auto pts = train.points();
  const std::span<const SpaceTimePoint<Dim>> pts_span(pts);
  const auto llt = factorize(kernel::gram<Dim>(pts_span, h, true), "posterior");
  const Eigen::MatrixXd kdh = kernel::cross_gram<Dim>(pts_span, query, h);
  const Eigen::MatrixXd v = llt.matrixL().solve(kdh);
  const Eigen::VectorXd resid =
      train.value_vector() - Eigen::VectorXd::Constant(train.size(), prior_mean);
  const Eigen::VectorXd w = llt.matrixL().solve(resid);

  Posterior out;
  out.mean = Eigen::VectorXd::Constant(query.size(), prior_mean) + v.transpose() * w;
  out.cov = kernel::gram<Dim>(query, h, false);
  out.cov.noalias() -= v.transpose() * v;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

template <int Dim>
double log_marginal_likelihood(const Dataset<Dim>& train, const Hyperparams& h,
                               double prior_mean) {
  if (train.empty()) throw PreconditionError("log_marginal_likelihood: empty training set");
  h.validate();
  const auto pts = train.points();
  const auto llt = factorize(kernel::gram<Dim>(std::span<const SpaceTimePoint<Dim>>(pts), h, true),
                             "log_marginal_likelihood");
  const Eigen::VectorXd resid =
      train.value_vector() - Eigen::VectorXd::Constant(train.size(), prior_mean);
  const Eigen::VectorXd w = llt.matrixL().solve(resid);
  const double n = static_cast<double>(train.size());
  return -0.5 * w.squaredNorm() - 0.5 * logdet_from_cholesky(llt) -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

// Grid search; the first maximizer wins ties.
template <int Dim>
Hyperparams fit_hyperparams(const Dataset<Dim>& train, std::span<const Hyperparams> grid,
                            double prior_mean) {
  if (grid.empty()) throw PreconditionError("fit_hyperparams: empty grid");
  if (train.empty()) throw PreconditionError("fit_hyperparams: empty training set");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double score = log_marginal_likelihood(train, grid[g], prior_mean);
    if (score > best_score) {
      best_score = score;
      best = g;
    }
  }
  return grid[best];
}

// Differential entropy of N(., cov): 0.5 logdet(cov) + (n/2) log(2 pi e).
inline double entropy_logdet(const Eigen::MatrixXd& cov) {
  if (cov.rows() == 0 || cov.rows() != cov.cols()) {
    throw PreconditionError("entropy_logdet: covariance must be square and non-empty");
  }
  const auto llt = factorize(cov, "entropy_logdet");
  const double n = static_cast<double>(cov.rows());
  return 0.5 * logdet_from_cholesky(llt) +
         0.5 * n * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

struct ValueAndGradient {
  double value = 0.0;
  // Stacked per query point: [d/dp_0; d/dp_1; ...], length Dim * n_query.
  Eigen::VectorXd grad;
};

// f = -logdet(posterior covariance at `query`), with its gradient with
// respect to every query position (times held fixed).
template <int Dim>
ValueAndGradient neg_logdet_and_grad(const Dataset<Dim>& train,
                                     std::span<const SpaceTimePoint<Dim>> query,
                                     const Hyperparams& h) {
  if (train.empty()) throw PreconditionError("neg_logdet_and_grad: empty training set");
  if (query.empty()) throw PreconditionError("neg_logdet_and_grad: empty query");
  h.validate();
  const auto pts = train.points();
  const std::span<const SpaceTimePoint<Dim>> pts_span(pts);
  const auto nd = static_cast<Eigen::Index>(pts.size());
  const auto nq = static_cast<Eigen::Index>(query.size());

  const auto llt_d = factorize(kernel::gram<Dim>(pts_span, h, true), "neg_logdet_and_grad");
  const Eigen::MatrixXd kdh = kernel::cross_gram<Dim>(pts_span, query, h);
  const Eigen::MatrixXd v = llt_d.matrixL().solve(kdh);
  Eigen::MatrixXd cov = kernel::gram<Dim>(query, h, false);
  cov.noalias() -= v.transpose() * v;
  cov = 0.5 * (cov + cov.transpose()).eval();
  const auto llt_h = factorize(cov, "neg_logdet_and_grad: posterior covariance");

  ValueAndGradient out;
  out.value = -logdet_from_cholesky(llt_h);

  // d f = -tr(W dS) with W = S^{-1}, dS = dK_HH - dK_DH^T A - A^T dK_DH,
  // A = Sigma_D^{-1} K_DH.
  const Eigen::MatrixXd w = llt_h.solve(Eigen::MatrixXd::Identity(nq, nq));
  const Eigen::MatrixXd a = llt_d.matrixU().solve(v);
  const Eigen::MatrixXd aw = a * w;

  out.grad = Eigen::VectorXd::Zero(Dim * nq);
  for (Eigen::Index i = 0; i < nq; ++i) {
    Point<Dim> g = Point<Dim>::Zero();
    for (Eigen::Index j = 0; j < nq; ++j) {
      if (j == i) continue;
      g += w(i, j) *
           kernel::kernel_grad_position<Dim>(query[i].p, query[j].p, query[i].t, query[j].t, h);
    }
    for (Eigen::Index m = 0; m < nd; ++m) {
      g -= aw(m, i) *
           kernel::kernel_grad_position<Dim>(query[i].p, pts[m].p, query[i].t, pts[m].t, h);
    }
    out.grad.template segment<Dim>(Dim * i) = -2.0 * g;
  }
  return out;
}

}  // namespace gp
}  // namespace stipp

#endif  // STIPP_GP_HPP

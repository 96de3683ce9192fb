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

// Test-only reference computations. Nothing here calls into the library's
// GP or kernel code, so the checks stay independent of the code under test.

#ifndef STIPP_TESTS_SUPPORT_ORACLES_HPP
#define STIPP_TESTS_SUPPORT_ORACLES_HPP

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace stipp::testing {

struct StPoint {
  Eigen::Vector2d p;
  double t;
};

// Kernel written out directly from its formula.
inline double ref_kernel(const StPoint& a, const StPoint& b, double sigma2, double ell_s,
                         double ell_t) {
  const double dx = a.p.x() - b.p.x();
  const double dy = a.p.y() - b.p.y();
  return sigma2 * std::exp(-(dx * dx + dy * dy) / (2.0 * ell_s * ell_s) - std::fabs(a.t - b.t) / ell_t);
}

struct Conditioned {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Builds the joint covariance of [train (noisy); query (latent)] and
// conditions on the training values with an explicit LU inverse. The
// library factors Sigma_D with a 1e-10 diagonal jitter; `jitter` lets the
// oracle describe the same model.
inline Conditioned brute_condition(const std::vector<StPoint>& train, const Eigen::VectorXd& y,
                                   const std::vector<StPoint>& query, double sigma2, double ell_s,
                                   double ell_t, double noise_var, double prior_mean,
                                   double jitter = 1e-10) {
  const int n = static_cast<int>(train.size());
  const int m = static_cast<int>(query.size());
  std::vector<StPoint> all = train;
  all.insert(all.end(), query.begin(), query.end());
  Eigen::MatrixXd joint(n + m, n + m);
  for (int a = 0; a < n + m; ++a)
    for (int b = 0; b < n + m; ++b) joint(a, b) = ref_kernel(all[a], all[b], sigma2, ell_s, ell_t);
  for (int a = 0; a < n; ++a) joint(a, a) += noise_var + jitter;
  const Eigen::MatrixXd s_dd = joint.topLeftCorner(n, n);
  const Eigen::MatrixXd s_dq = joint.topRightCorner(n, m);
  const Eigen::MatrixXd s_qq = joint.bottomRightCorner(m, m);
  const Eigen::MatrixXd inv = s_dd.fullPivLu().inverse();
  Conditioned out;
  out.mean = Eigen::VectorXd::Constant(m, prior_mean) +
             s_dq.transpose() * inv * (y - Eigen::VectorXd::Constant(n, prior_mean));
  out.cov = s_qq - s_dq.transpose() * inv * s_dq;
  return out;
}

// log N(y; mu 1, K + noise I) from an explicit inverse and LU determinant.
inline double dense_lml(const std::vector<StPoint>& train, const Eigen::VectorXd& y, double sigma2,
                        double ell_s, double ell_t, double noise_var, double prior_mean) {
  const int n = static_cast<int>(train.size());
  Eigen::MatrixXd k(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) k(a, b) = ref_kernel(train[a], train[b], sigma2, ell_s, ell_t);
  k.diagonal().array() += noise_var;
  const Eigen::VectorXd r = y - Eigen::VectorXd::Constant(n, prior_mean);
  const auto lu = k.fullPivLu();
  return -0.5 * r.dot(lu.inverse() * r) - 0.5 * std::log(lu.determinant()) -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

// Central differences of a scalar function of a vector.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

inline double relative_error(double a, double b, double floor = 1e-12) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), floor});
}

// Samples N(mean 1, K) for points, K from ref_kernel plus noise.
inline Eigen::VectorXd sample_prior(const std::vector<StPoint>& pts, double sigma2, double ell_s,
                                    double ell_t, double noise_var, double mean, std::mt19937_64& rng) {
  const int n = static_cast<int>(pts.size());
  Eigen::MatrixXd k(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) k(a, b) = ref_kernel(pts[a], pts[b], sigma2, ell_s, ell_t);
  k.diagonal().array() += noise_var + 1e-9;
  const Eigen::MatrixXd l = k.llt().matrixL();
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd e(n);
  for (int a = 0; a < n; ++a) e[a] = z(rng);
  return Eigen::VectorXd::Constant(n, mean) + l * e;
}

}  // namespace stipp::testing

#endif  // STIPP_TESTS_SUPPORT_ORACLES_HPP

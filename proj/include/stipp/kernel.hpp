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

// Spatio-temporal covariance: squared exponential in space times an
// exponential (Matern 1/2) in time.
//
//   k(p, p', t, t') = sigma2 * exp(-|p - p'|^2 / (2 ell_s^2) - |t - t'| / ell_t)

#ifndef STIPP_KERNEL_HPP
#define STIPP_KERNEL_HPP

#include <cmath>
#include <span>
#include <sstream>

#include <Eigen/Dense>

#include "stipp/errors.hpp"

namespace stipp {

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;

using Point2 = Point<2>;

// Added to Gram diagonals before every Cholesky factorization.
inline constexpr double kJitter = 1e-10;

template <int Dim>
struct SpaceTimePoint {
  Point<Dim> p;
  double t = 0.0;
};

struct Hyperparams {
  double sigma2 = 1.0;     // signal variance
  double ell_s = 1.0;      // spatial length scale [m]
  double ell_t = 1.0;      // temporal length scale [s]
  double noise_var = 0.0;  // measurement noise variance

  bool valid() const {
    return std::isfinite(sigma2) && std::isfinite(ell_s) && std::isfinite(ell_t) &&
           std::isfinite(noise_var) && sigma2 > 0.0 && ell_s > 0.0 && ell_t > 0.0 &&
           noise_var >= 0.0;
  }

  void validate() const {
    if (!valid()) {
      std::ostringstream os;
      os << "invalid hyperparameters: sigma2=" << sigma2 << " ell_s=" << ell_s
         << " ell_t=" << ell_t << " noise_var=" << noise_var;
      throw DomainError(os.str());
    }
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

namespace kernel {

template <int Dim>
double eval_kernel(const Point<Dim>& p, const Point<Dim>& p_prime, double t, double t_prime,
                   const Hyperparams& h) {
  const double sq = (p - p_prime).squaredNorm();
  const double dt = std::abs(t - t_prime);
  if (!std::isfinite(sq) || !std::isfinite(dt)) {
    throw DomainError("eval_kernel: non-finite input");
  }
  return h.sigma2 * std::exp(-sq / (2.0 * h.ell_s * h.ell_s) - dt / h.ell_t);
}

template <int Dim>
double eval_kernel(const SpaceTimePoint<Dim>& a, const SpaceTimePoint<Dim>& b,
                   const Hyperparams& h) {
  return eval_kernel<Dim>(a.p, b.p, a.t, b.t, h);
}

// d k / d p. Zero when p == p'.
template <int Dim>
Point<Dim> kernel_grad_position(const Point<Dim>& p, const Point<Dim>& p_prime, double t,
                                double t_prime, const Hyperparams& h) {
  return -(p - p_prime) / (h.ell_s * h.ell_s) * eval_kernel<Dim>(p, p_prime, t, t_prime, h);
}

template <int Dim>
Eigen::MatrixXd gram(std::span<const SpaceTimePoint<Dim>> points, const Hyperparams& h,
                     bool add_noise) {
  if (points.empty()) throw PreconditionError("gram: empty point list");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    k(a, a) = eval_kernel<Dim>(points[a], points[a], h);
    for (Eigen::Index b = 0; b < a; ++b) {
      k(a, b) = k(b, a) = eval_kernel<Dim>(points[a], points[b], h);
    }
  }
  if (add_noise) k.diagonal().array() += h.noise_var;
  return k;
}

// Rows follow `rows`, columns follow `cols`.
template <int Dim>
Eigen::MatrixXd cross_gram(std::span<const SpaceTimePoint<Dim>> rows,
                           std::span<const SpaceTimePoint<Dim>> cols, const Hyperparams& h) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd k(n, m);
  for (Eigen::Index b = 0; b < m; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) k(a, b) = eval_kernel<Dim>(rows[a], cols[b], h);
  }
  return k;
}

}  // namespace kernel
}  // namespace stipp

#endif  // STIPP_KERNEL_HPP

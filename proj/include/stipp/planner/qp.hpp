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

// Local subproblem of the distributed planner:
//
//   minimize   (c + Lambda)^T zeta + (q/2) |zeta|^2   over zeta in B_i
//
// The own path is parameterized by its control increments u, so the
// dynamics hold exactly; every other constraint is a box or a 2-D ball on
// an affine image of the variables. The problem is solved with ADMM
// (over-relaxed, adaptive penalty) on the splitting y = G x + g0, y in C,
// after diagonal equilibration of the variables and constraint blocks.
// The solver object keeps its factorization and iterates, so repeated solves
// with a changing linear term warm-start from the previous answer.

#ifndef STIPP_PLANNER_QP_HPP
#define STIPP_PLANNER_QP_HPP

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stipp/errors.hpp"
#include "stipp/planner/types.hpp"

namespace stipp::planner {

struct QpOptions {
  int max_iters = 5000;
  double tol = 1e-8;
  double relaxation = 1.6;
  // Cap-reached solves whose constraint residual exceeds this are infeasible.
  double infeasibility_tol = 1e-4;
};

// Anchor path for the copy of one neighbor. A fixed copy is not a decision
// variable: it only enters the ball constraint.
struct NeighborRef {
  int id = 0;
  Eigen::VectorXd path;
  bool fixed = false;
};

struct QpResult {
  Eigen::VectorXd zeta;      // [own; copies in LocalConstraints::neighbors order]
  Eigen::VectorXd controls;  // own increments u, stacked per step
  int iterations = 0;
  bool converged = false;    // false: iteration cap hit, best iterate returned
  double primal_residual = 0.0;
  double optimality_residual = 0.0;
};

class LocalQp {
 public:
  static constexpr int kMaxAdaptations = 20;

  LocalQp(LocalConstraints cons, double q, std::vector<NeighborRef> refs, QpOptions opts = {})
      : cons_(std::move(cons)), q_(q), refs_(std::move(refs)), opts_(opts) {
    cons_.validate();
    if (!(q_ > 0.0)) throw PreconditionError("LocalQp: proximal weight q must be positive");
    if (refs_.size() != cons_.neighbors.size()) {
      throw PreconditionError("LocalQp: one neighbor reference per neighbor is required");
    }
    h_ = cons_.horizon;
    const int p = 2 * h_;
    for (std::size_t k = 0; k < refs_.size(); ++k) {
      if (refs_[k].id != cons_.neighbors[k] || refs_[k].path.size() != p) {
        throw PreconditionError("LocalQp: neighbor reference does not match constraints");
      }
    }
    build();
    warm_start_stay_put();
  }

  int num_variables() const { return static_cast<int>(g_.cols()); }
  int zeta_size() const { return 2 * h_ * (1 + static_cast<int>(refs_.size())); }
  const LocalConstraints& constraints() const { return cons_; }

  // Own path for increments u.
  Eigen::VectorXd own_path(const Eigen::VectorXd& u) const { return l_ * u + p0_; }

  QpResult solve(const Eigen::VectorXd& c, const Eigen::VectorXd& dual_offset) {
    if (c.size() != zeta_size() || dual_offset.size() != zeta_size()) {
      throw PreconditionError("LocalQp::solve: coefficient size mismatch");
    }
    const Eigen::VectorXd target = -(c + dual_offset) / q_;
    set_target(target);

    const int n = num_variables();
    QpResult res;
    const Eigen::VectorXd rhs = d_.cwiseProduct(rhs_obj_);
    Eigen::VectorXd x_new(n), gx, xh, y_new;
    double r_p = 0.0, r_d = 0.0;
    int it = 0;
    int adaptations = 0;
    for (it = 1; it <= opts_.max_iters; ++it) {
      x_new = llt_.solve(rhs + rho_ * sg_.transpose() * (y_ - w_ - sg0_));
      gx = sg_ * x_new + sg0_;
      xh = opts_.relaxation * gx + (1.0 - opts_.relaxation) * y_;
      y_new = project(xh + w_, sblocks_);
      w_ += xh - y_new;
      // Residuals in the original units.
      r_p = (gx - y_new).cwiseQuotient(e_).lpNorm<Eigen::Infinity>();
      r_d = rho_ * (sg_.transpose() * (y_new - y_)).cwiseQuotient(d_).lpNorm<Eigen::Infinity>();
      const double dx = (x_new - xs_).cwiseProduct(d_).lpNorm<Eigen::Infinity>();
      xs_ = x_new;
      y_ = y_new;
      if (dx < opts_.tol && r_p < opts_.tol && r_d < opts_.tol) {
        res.converged = true;
        break;
      }
      if (!w_.allFinite() || w_.lpNorm<Eigen::Infinity>() > 1e12) break;
      // A penalty that keeps changing can make ADMM cycle, so it is only
      // adapted a bounded number of times per solve.
      if (it % 25 == 0 && adaptations < kMaxAdaptations && adapt_penalty(r_p, r_d)) ++adaptations;
    }
    res.iterations = std::min(it, opts_.max_iters);
    x_ = xs_.cwiseProduct(d_);

    if (!res.converged) {
      const Eigen::VectorXd v = g_ * x_ + g0_;
      const Eigen::VectorXd viol = v - project(v, blocks_);
      Eigen::Index worst = 0;
      const double max_viol = viol.cwiseAbs().maxCoeff(&worst);
      if (!x_.allFinite() || max_viol > opts_.infeasibility_tol) {
        std::ostringstream os;
        os << "solve_local_qp: robot plan infeasible; constraint '" << row_label(worst)
           << "' violated by " << max_viol << " after " << res.iterations << " iterations";
        warm_start_stay_put();
        throw InfeasibleError(os.str());
      }
    }

    // Controls must satisfy the increment and speed bounds exactly.
    Eigen::VectorXd u = x_.head(2 * h_);
    double speed = cons_.speed;
    for (int k = 0; k < h_; ++k) {
      u[2 * k] = std::clamp(u[2 * k], -cons_.dv_max, cons_.dv_max);
      u[2 * k] = std::clamp(u[2 * k], -cons_.speed_max - speed, cons_.speed_max - speed);
      u[2 * k + 1] = std::clamp(u[2 * k + 1], -cons_.dtheta_max, cons_.dtheta_max);
      speed += u[2 * k];
    }
    Eigen::VectorXd x_final = x_;
    x_final.head(2 * h_) = u;

    res.controls = u;
    res.zeta = assemble_zeta(x_final);
    res.primal_residual = r_p;
    res.optimality_residual = optimality_residual(x_final, rho_ * w_.cwiseProduct(e_));
    return res;
  }

  // First-order optimality of (x, mu) for the current target: the larger of
  // |grad F(x) + G^T mu| and |G x + g0 - P_C(G x + g0 + mu)|, both in the
  // infinity norm. Zero exactly at a KKT point.
  double optimality_residual(const Eigen::VectorXd& x, const Eigen::VectorXd& mu) const {
    const Eigen::VectorXd grad = q_ * (mtm_ * x) - rhs_obj_;
    const double stationarity = (grad + g_.transpose() * mu).lpNorm<Eigen::Infinity>();
    const Eigen::VectorXd v = g_ * x + g0_;
    const double complementarity = (v - project(v + mu, blocks_)).lpNorm<Eigen::Infinity>();
    return std::max(stationarity, complementarity);
  }

  void warm_start_stay_put() {
    const int n = num_variables();
    x_ = Eigen::VectorXd::Zero(n);
    // Braking to a stop on the first step keeps the own path at p.
    x_[0] = std::clamp(-cons_.speed, -cons_.dv_max, cons_.dv_max);
    int k = 0;
    for (const auto& r : refs_) {
      if (r.fixed) continue;
      x_.segment(2 * h_ * (1 + k), 2 * h_) = r.path;
      ++k;
    }
    xs_ = x_.cwiseQuotient(d_);
    y_ = project(sg_ * xs_ + sg0_, sblocks_);
    w_ = Eigen::VectorXd::Zero(g_.rows());
  }

 private:
  enum class Kind { kBox, kBall };
  struct Block {
    Kind kind;
    int row = 0;
    int size = 0;
    Eigen::VectorXd lo, hi;  // box only
    double radius = 0.0;     // ball only
    std::string label;
  };

  void build() {
    const int p = 2 * h_;
    const auto& a = cons_.model.a;
    const auto& b = cons_.model.b;

    // own_h = A own_{h-1} + drift + B (u_1 + ... + u_h), own_0 = p.
    l_ = Eigen::MatrixXd::Zero(p, p);
    p0_ = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(2, p);
    Eigen::Vector2d off = cons_.current_position;
    for (int hh = 0; hh < h_; ++hh) {
      coef = a * coef;
      for (int m = 0; m <= hh; ++m) coef.middleCols<2>(2 * m) += b;
      off = a * off + cons_.model.drift;
      l_.middleRows(2 * hh, 2) = coef;
      p0_.segment<2>(2 * hh) = off;
    }

    free_index_.assign(refs_.size(), -1);
    int n_free = 0;
    for (std::size_t k = 0; k < refs_.size(); ++k) {
      if (!refs_[k].fixed) free_index_[k] = n_free++;
    }
    const int n = p * (1 + n_free);

    // Objective F(x) = (q/2) |M x + m0 - a|^2 over the own path and free copies.
    m_ = Eigen::MatrixXd::Zero(n, n);
    m_.topLeftCorner(p, p) = l_;
    if (n_free > 0) m_.bottomRightCorner(p * n_free, p * n_free).setIdentity();
    m0_ = Eigen::VectorXd::Zero(n);
    m0_.head(p) = p0_;
    mtm_ = m_.transpose() * m_;

    std::vector<Eigen::MatrixXd> rows;
    std::vector<Eigen::VectorXd> offsets;
    int row = 0;
    auto add_box = [&](Eigen::MatrixXd gb, Eigen::VectorXd off, Eigen::VectorXd lo,
                       Eigen::VectorXd hi, std::string label) {
      const int sz = static_cast<int>(gb.rows());
      blocks_.push_back({Kind::kBox, row, sz, std::move(lo), std::move(hi), 0.0, std::move(label)});
      rows.push_back(std::move(gb));
      offsets.push_back(std::move(off));
      row += sz;
    };

    Eigen::VectorXd u_hi(p), q_lo(p), q_hi(p);
    for (int hh = 0; hh < h_; ++hh) {
      u_hi.segment<2>(2 * hh) << cons_.dv_max, cons_.dtheta_max;
      q_lo.segment<2>(2 * hh) = cons_.workspace.lo;
      q_hi.segment<2>(2 * hh) = cons_.workspace.hi;
    }
    {
      Eigen::MatrixXd gb = Eigen::MatrixXd::Zero(p, n);
      gb.leftCols(p).setIdentity();
      add_box(gb, Eigen::VectorXd::Zero(p), -u_hi, u_hi, "control bounds");
    }
    {
      Eigen::MatrixXd gb = Eigen::MatrixXd::Zero(p, n);
      gb.leftCols(p) = l_;
      add_box(gb, p0_, q_lo, q_hi, "own path in workspace");
    }
    if (std::isfinite(cons_.speed_max)) {
      Eigen::MatrixXd gb = Eigen::MatrixXd::Zero(h_, n);
      for (int hh = 0; hh < h_; ++hh)
        for (int m = 0; m <= hh; ++m) gb(hh, 2 * m) = 1.0;
      add_box(gb, Eigen::VectorXd::Constant(h_, cons_.speed),
              Eigen::VectorXd::Constant(h_, -cons_.speed_max), Eigen::VectorXd::Constant(h_, cons_.speed_max),
              "speed limit");
    }
    for (std::size_t k = 0; k < refs_.size(); ++k) {
      if (refs_[k].fixed) continue;
      Eigen::MatrixXd gb = Eigen::MatrixXd::Zero(p, n);
      gb.middleCols(p * (1 + free_index_[k]), p).setIdentity();
      add_box(gb, Eigen::VectorXd::Zero(p), q_lo, q_hi,
              "copy of robot " + std::to_string(refs_[k].id) + " in workspace");
    }
    for (std::size_t s = 0; s < cons_.preserved.size(); ++s) {
      const int id = cons_.preserved[s];
      const auto k = static_cast<std::size_t>(
          std::find(cons_.neighbors.begin(), cons_.neighbors.end(), id) - cons_.neighbors.begin());
      const double radius =
          s < cons_.preserved_radius.size() ? cons_.preserved_radius[s] : cons_.radius;
      for (int hh = 0; hh < h_; ++hh) {
        Eigen::MatrixXd gb = Eigen::MatrixXd::Zero(2, n);
        gb.leftCols(p) = l_.middleRows(2 * hh, 2);
        Eigen::Vector2d off = p0_.segment<2>(2 * hh);
        if (refs_[k].fixed) {
          off -= refs_[k].path.segment<2>(2 * hh);
        } else {
          gb.block<2, 2>(0, p * (1 + free_index_[k]) + 2 * hh) = -Eigen::Matrix2d::Identity();
        }
        blocks_.push_back({Kind::kBall, row, 2, {}, {}, radius,
                           "link to robot " + std::to_string(id) + " at step " +
                               std::to_string(hh + 1)});
        rows.push_back(std::move(gb));
        offsets.push_back(off);
        row += 2;
      }
    }

    g_.resize(row, n);
    g0_.resize(row);
    int r = 0;
    for (std::size_t b2 = 0; b2 < rows.size(); ++b2) {
      g_.middleRows(r, rows[b2].rows()) = rows[b2];
      g0_.segment(r, offsets[b2].size()) = offsets[b2];
      r += static_cast<int>(rows[b2].rows());
    }
    equilibrate();
    rho_ = q_;
    refactor();
  }

  // Ruiz-style scaling x = D xs, rows E (G x + g0). Ball blocks share one
  // row factor so that the scaled set is still a ball.
  void equilibrate() {
    const Eigen::Index n = g_.cols();
    d_ = Eigen::VectorXd::Ones(n);
    e_ = Eigen::VectorXd::Ones(g_.rows());
    const Eigen::MatrixXd mw = std::sqrt(q_) * m_;
    for (int round = 0; round < 15; ++round) {
      const Eigen::MatrixXd sg = e_.asDiagonal() * g_ * d_.asDiagonal();
      const Eigen::MatrixXd sm = mw * d_.asDiagonal();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double c = std::max(sg.col(j).lpNorm<Eigen::Infinity>(), sm.col(j).lpNorm<Eigen::Infinity>());
        if (c > 0.0) d_[j] /= std::sqrt(c);
      }
      for (const auto& b : blocks_) {
        const double r = sg.middleRows(b.row, b.size).lpNorm<Eigen::Infinity>();
        if (r <= 0.0) continue;
        if (b.kind == Kind::kBall) {
          e_.segment(b.row, b.size) /= std::sqrt(r);
        } else {
          for (int k = 0; k < b.size; ++k) {
            const double rk = sg.row(b.row + k).lpNorm<Eigen::Infinity>();
            if (rk > 0.0) e_[b.row + k] /= std::sqrt(rk);
          }
        }
      }
    }
    sg_ = e_.asDiagonal() * g_ * d_.asDiagonal();
    sg0_ = e_.cwiseProduct(g0_);
    sblocks_ = blocks_;
    for (auto& b : sblocks_) {
      if (b.kind == Kind::kBox) {
        b.lo = b.lo.cwiseProduct(e_.segment(b.row, b.size));
        b.hi = b.hi.cwiseProduct(e_.segment(b.row, b.size));
      } else {
        b.radius *= e_[b.row];
      }
    }
    smtm_ = d_.asDiagonal() * mtm_ * d_.asDiagonal();
    sgtg_ = sg_.transpose() * sg_;
  }

  void refactor() {
    llt_.compute(q_ * smtm_ + rho_ * sgtg_);
    if (llt_.info() != Eigen::Success) throw NumericError("LocalQp: KKT factorization failed");
  }

  // Returns true when the penalty changed.
  bool adapt_penalty(double r_p, double r_d) {
    constexpr double kFactor = 5.0;
    double scale = 1.0;
    if (r_p > 10.0 * r_d) scale = kFactor;
    else if (r_d > 10.0 * r_p) scale = 1.0 / kFactor;
    if (scale == 1.0) return false;
    const double next = std::clamp(rho_ * scale, 1e-6 * q_, 1e6 * q_);
    if (next == rho_) return false;
    w_ *= rho_ / next;
    rho_ = next;
    refactor();
    return true;
  }

  void set_target(const Eigen::VectorXd& target) {
    const int p = 2 * h_;
    Eigen::VectorXd a_sel(num_variables());
    a_sel.head(p) = target.head(p);
    for (std::size_t k = 0; k < refs_.size(); ++k) {
      if (refs_[k].fixed) continue;
      a_sel.segment(p * (1 + free_index_[k]), p) = target.segment(p * (1 + k), p);
    }
    rhs_obj_ = q_ * m_.transpose() * (a_sel - m0_);
  }

  static Eigen::VectorXd project(const Eigen::VectorXd& v, const std::vector<Block>& blocks) {
    Eigen::VectorXd out = v;
    for (const auto& b : blocks) {
      if (b.kind == Kind::kBox) {
        out.segment(b.row, b.size) = v.segment(b.row, b.size).cwiseMax(b.lo).cwiseMin(b.hi);
      } else {
        const double nrm = v.segment<2>(b.row).norm();
        if (nrm > b.radius) out.segment<2>(b.row) *= b.radius / nrm;
      }
    }
    return out;
  }

  std::string row_label(Eigen::Index row) const {
    for (const auto& b : blocks_) {
      if (row >= b.row && row < b.row + b.size) return b.label;
    }
    return "?";
  }

  Eigen::VectorXd assemble_zeta(const Eigen::VectorXd& x) const {
    const int p = 2 * h_;
    Eigen::VectorXd zeta(zeta_size());
    zeta.head(p) = own_path(x.head(p));
    for (std::size_t k = 0; k < refs_.size(); ++k) {
      zeta.segment(p * (1 + k), p) =
          refs_[k].fixed ? refs_[k].path : x.segment(p * (1 + free_index_[k]), p);
    }
    return zeta;
  }

  LocalConstraints cons_;
  double q_;
  std::vector<NeighborRef> refs_;
  QpOptions opts_;
  int h_ = 1;

  Eigen::MatrixXd l_;
  Eigen::VectorXd p0_;
  std::vector<int> free_index_;
  Eigen::MatrixXd m_, mtm_;
  Eigen::VectorXd m0_;
  Eigen::MatrixXd g_;
  Eigen::VectorXd g0_;
  std::vector<Block> blocks_;
  // Equilibrated copies used by the iteration.
  Eigen::VectorXd d_, e_;
  Eigen::MatrixXd sg_, sgtg_, smtm_;
  Eigen::VectorXd sg0_;
  std::vector<Block> sblocks_;

  double rho_ = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd rhs_obj_;
  Eigen::VectorXd x_, xs_, y_, w_;
};

// One-shot solve from the stay-put warm start.
inline QpResult solve_local_qp(const Eigen::VectorXd& c, double q, const Eigen::VectorXd& dual_offset,
                               const LocalConstraints& cons, std::vector<NeighborRef> neighbor_refs,
                               QpOptions opts = {}) {
  LocalQp qp(cons, q, std::move(neighbor_refs), opts);
  return qp.solve(c, dual_offset);
}

}  // namespace stipp::planner

#endif  // STIPP_PLANNER_QP_HPP

// Copyright 2026 The brnash Authors
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

#include "brnash/ocp.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace brnash {

Vec PlayerOcp::pack(const Trajectory& z) const {
  if (static_cast<int>(z.U.size()) != N || static_cast<int>(z.X.size()) != N + 1) {
    throw std::invalid_argument("PlayerOcp::pack: trajectory horizon mismatch");
  }
  Vec out(N * m + (N + 1) * n);
  for (int k = 0; k < N; ++k) out.segment(u_offset(k), m) = z.U[k];
  for (int k = 0; k <= N; ++k) out.segment(x_offset(k), n) = z.X[k];
  return out;
}

Trajectory PlayerOcp::unpack(const Vec& zvec) const {
  if (zvec.size() != N * m + (N + 1) * n) {
    throw std::invalid_argument("PlayerOcp::unpack: vector length mismatch");
  }
  Trajectory z;
  z.U.resize(N);
  z.X.resize(N + 1);
  for (int k = 0; k < N; ++k) z.U[k] = zvec.segment(u_offset(k), m);
  for (int k = 0; k <= N; ++k) z.X[k] = zvec.segment(x_offset(k), n);
  return z;
}

PlayerOcp build_player_ocp(const GameSpec& game, int p, const Trajectory& Z_other) {
  return build_player_ocp(game, p, Z_other.X);
}

PlayerOcp build_player_ocp(const GameSpec& game, int p, const std::vector<Vec>& X_other) {
  if (p < 0 || p > 1) throw std::invalid_argument("build_player_ocp: player must be 0 or 1");
  if (static_cast<int>(X_other.size()) != game.N + 1) {
    throw std::invalid_argument("build_player_ocp: opponent state sequence length mismatch");
  }

  PlayerOcp ocp;
  ocp.player = p;
  ocp.N = game.N;
  ocp.n = game.nx[p];
  ocp.m = game.nu[p];

  const int N = ocp.N;
  const int n = ocp.n;
  const int m = ocp.m;
  const int ndec = N * m + (N + 1) * n;
  const int n_h = game.n_eq_rows;
  const int n_g = game.n_ineq_rows;
  const int rows_per_step = n + n_h;
  const int p_eq = N * rows_per_step;
  const int q_ineq = (N + 1) * n_g;

  // The game spec and opponent states are captured by value so the problem
  // stays valid even if the caller's spec goes out of scope.
  auto gs = std::make_shared<const GameSpec>(game);
  const std::vector<Vec> Xo = X_other;

  NLPProblem nlp;
  nlp.n = ndec;
  nlp.p = p_eq;
  nlp.q = q_ineq;
  nlp.name = "ocp_p" + std::to_string(p + 1);

  // ---- objective ---------------------------------------------------------
  nlp.objective = [gs, Xo, p, N, n, m, ndec](const Vec& z, Vec* grad) {
    const int x_off = N * m;
    double f = 0.0;
    if (grad) {
      grad->setZero(ndec);
    }
    Vec u_prev = Vec::Zero(m);
    Vec gx(n), gu(m), gup(m);
    for (int k = 0; k < N; ++k) {
      const Vec x = z.segment(n * k + x_off, n);
      const Vec u = z.segment(m * k, m);
      f += gs->stage_cost(p, k, x, u, u_prev, grad ? &gx : nullptr,
                          grad ? &gu : nullptr, grad ? &gup : nullptr);
      if (grad) {
        grad->segment(n * k + x_off, n) += gx;
        grad->segment(m * k, m) += gu;
        if (k > 0) grad->segment(m * (k - 1), m) += gup;
      }
      u_prev = u;
    }
    Vec gxN(n);
    f += gs->terminal_cost(p, z.segment(n * N + x_off, n), Xo[N],
                           grad ? &gxN : nullptr, nullptr);
    if (grad) grad->segment(n * N + x_off, n) += gxN;
    return f;
  };

  // ---- constant objective Hessian ---------------------------------------
  {
    Mat Hxx, Huu, Hu_up, Hup_up, Hxx_term;
    game.cost_hessian(p, &Hxx, &Huu, &Hu_up, &Hup_up, &Hxx_term);
    Mat H = Mat::Zero(ndec, ndec);
    const int x_off = N * m;
    for (int k = 0; k < N; ++k) {
      H.block(m * k, m * k, m, m) += Huu;
      H.block(n * k + x_off, n * k + x_off, n, n) += Hxx;
      if (k > 0) {
        H.block(m * k, m * (k - 1), m, m) += Hu_up;
        H.block(m * (k - 1), m * k, m, m) += Hu_up.transpose();
        H.block(m * (k - 1), m * (k - 1), m, m) += Hup_up;
      }
    }
    H.block(n * N + x_off, n * N + x_off, n, n) += Hxx_term;
    nlp.objective_hessian = [H](const Vec&, Mat* out) { *out = H; };
  }

  // ---- equality constraints (defects + per-step h rows) ------------------
  nlp.eq = [gs, p, N, n, m, n_h, rows_per_step, p_eq, ndec](
               const Vec& z, Vec* val, Mat* J) {
    const int x_off = N * m;
    if (val) val->setZero(p_eq);
    if (J) J->setZero(p_eq, ndec);
    Mat A(n, n), B(n, m);
    for (int k = 0; k < N; ++k) {
      const Vec x = z.segment(n * k + x_off, n);
      const Vec u = z.segment(m * k, m);
      const Vec xn = gs->dynamics(p, x, u, J ? &A : nullptr, J ? &B : nullptr);
      const int row = k * rows_per_step;
      if (val) val->segment(row, n) = z.segment(n * (k + 1) + x_off, n) - xn;
      if (J) {
        J->block(row, n * (k + 1) + x_off, n, n) = Mat::Identity(n, n);
        J->block(row, n * k + x_off, n, n) = -A;
        J->block(row, m * k, n, m) = -B;
      }
      if (n_h > 0) {
        Mat Jhx(n_h, n), Jhu(n_h, m);
        Vec h = gs->stage_eq(p, k, x, u, J ? &Jhx : nullptr, J ? &Jhu : nullptr);
        if (val) val->segment(row + n, n_h) = h;
        if (J) {
          J->block(row + n, n * k + x_off, n_h, n) = Jhx;
          J->block(row + n, m * k, n_h, m) = Jhu;
        }
      }
    }
  };

  // ---- inequality constraints (g rows, k = 0..N) --------------------------
  if (q_ineq > 0) {
    nlp.ineq = [gs, Xo, p, N, n, m, n_g, q_ineq, ndec](
                   const Vec& z, Vec* val, Mat* J) {
      const int x_off = N * m;
      if (val) val->setZero(q_ineq);
      if (J) J->setZero(q_ineq, ndec);
      Mat Jg_self(n_g, n);
      for (int k = 0; k <= N; ++k) {
        const Vec x = z.segment(n * k + x_off, n);
        Vec g = gs->stage_ineq(p, k, x, Xo[k], J ? &Jg_self : nullptr, nullptr);
        if (val) val->segment(k * n_g, n_g) = g;
        if (J) J->block(k * n_g, n * k + x_off, n_g, n) = Jg_self;
      }
    };
  }

  // ---- box bounds ---------------------------------------------------------
  nlp.lb = Vec::Constant(ndec, -kInfBound);
  nlp.ub = Vec::Constant(ndec, kInfBound);
  const int x_off = N * m;
  for (int k = 0; k < N; ++k) {
    nlp.lb.segment(m * k, m) = game.u_lo[p];
    nlp.ub.segment(m * k, m) = game.u_hi[p];
  }
  for (int k = 0; k <= N; ++k) {
    nlp.lb.segment(n * k + x_off, n) = game.x_lo[p];
    nlp.ub.segment(n * k + x_off, n) = game.x_hi[p];
  }
  // Pin the initial state.
  nlp.lb.segment(x_off, n) = game.x0[p];
  nlp.ub.segment(x_off, n) = game.x0[p];

  ocp.nlp = std::move(nlp);
  return ocp;
}

}  // namespace brnash

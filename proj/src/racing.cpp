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

#include "brnash/racing.hpp"

#include <stdexcept>

namespace brnash {

namespace {
constexpr double kUnbounded = 1e20;
}

GameSpec make_racing_game(const RacingParams& rp, const Vec& x1_0, const Vec& x2_0) {
  if (x1_0.size() != 4 || x2_0.size() != 4)
    throw std::invalid_argument("make_racing_game: initial states must be 4-dimensional");

  GameSpec game;
  game.name = "racing";
  game.N = rp.N;
  game.dt = rp.dt;
  game.nx = {4, 4};
  game.nu = {2, 2};
  game.x0[0] = x1_0;
  game.x0[1] = x2_0;

  const TrackParams tp = rp.track;
  const VehicleParams vp = rp.vehicle;
  const double dt = rp.dt;

  game.dynamics = [tp, vp, dt](int, const Vec& x, const Vec& u, Mat* A, Mat* B) -> Vec {
    return euler_step(x, u, dt, tp, vp, A, B);
  };

  game.stage_cost = [rp](int, int /*k*/, const Vec& x, const Vec& u, const Vec& u_prev,
                         Vec* gx, Vec* gu, Vec* gu_prev) -> double {
    const Eigen::Vector2d du = u - u_prev;
    const double v = x[FS_V];
    if (gx != nullptr) {
      gx->setZero(4);
      (*gx)[FS_V] = 2.0 * rp.q_v * v;
    }
    if (gu != nullptr) *gu = 2.0 * rp.r_u * u + 2.0 * rp.p_du * du;
    if (gu_prev != nullptr) *gu_prev = -2.0 * rp.p_du * du;
    return rp.r_u * u.squaredNorm() + rp.p_du * du.squaredNorm() + rp.q_v * v * v;
  };

  game.terminal_cost = [rp](int p, const Vec& x_self, const Vec& x_other, Vec* g_self,
                            Vec* g_other) -> double {
    const double q_own = (p == 0) ? rp.q11 : rp.q22;
    const double q_opp = (p == 0) ? rp.q12 : rp.q21;
    if (g_self != nullptr) {
      g_self->setZero(4);
      (*g_self)[FS_S] = -q_own;
    }
    if (g_other != nullptr) {
      g_other->setZero(4);
      (*g_other)[FS_S] = q_opp;
    }
    return q_opp * x_other[FS_S] - q_own * x_self[FS_S];
  };

  game.cost_hessian = [rp](int, Mat* Hxx, Mat* Huu, Mat* Hu_uprev, Mat* Hup_up, Mat* Hxx_term) {
    if (Hxx != nullptr) {
      Hxx->setZero(4, 4);
      (*Hxx)(FS_V, FS_V) = 2.0 * rp.q_v;
    }
    if (Huu != nullptr) *Huu = (2.0 * rp.r_u + 2.0 * rp.p_du) * Mat::Identity(2, 2);
    if (Hu_uprev != nullptr) *Hu_uprev = -2.0 * rp.p_du * Mat::Identity(2, 2);
    if (Hup_up != nullptr) *Hup_up = 2.0 * rp.p_du * Mat::Identity(2, 2);
    if (Hxx_term != nullptr) Hxx_term->setZero(4, 4);
  };

  const double d_safe = rp.bounds.d_safe;
  game.n_ineq_rows = 1;
  game.stage_ineq = [tp, d_safe](int, int /*k*/, const Vec& x_self, const Vec& x_other,
                                 Mat* J_self, Mat* J_other) -> Vec {
    Eigen::Vector2d gs, go;
    const double c = collision_constraint_sq(x_self, x_other, tp, d_safe,
                                             J_self != nullptr ? &gs : nullptr,
                                             J_other != nullptr ? &go : nullptr);
    if (J_self != nullptr) {
      J_self->setZero(1, 4);
      (*J_self)(0, FS_S) = gs[0];
      (*J_self)(0, FS_T) = gs[1];
    }
    if (J_other != nullptr) {
      J_other->setZero(1, 4);
      (*J_other)(0, FS_S) = go[0];
      (*J_other)(0, FS_T) = go[1];
    }
    return Vec::Constant(1, c);
  };

  for (int p = 0; p < 2; ++p) {
    game.x_lo[p] = rp.bounds.x_lo;
    game.x_hi[p] = rp.bounds.x_hi;
    // psi is the wrap domain, not a solver constraint.
    game.x_lo[p][FS_PSI] = -kUnbounded;
    game.x_hi[p][FS_PSI] = kUnbounded;
    game.u_lo[p] = rp.bounds.u_lo;
    game.u_hi[p] = rp.bounds.u_hi;
  }

  // Either player's problem sees the opponent's states only through the
  // collision constraint (s, t at every step) and the terminal progress
  // reward (s_N, additive, already covered).
  const int N = rp.N;
  game.coupled_state_indices = [N](int) {
    std::vector<int> idx;
    idx.reserve(2 * (N + 1));
    for (int k = 0; k <= N; ++k) {
      idx.push_back(4 * k + FS_S);
      idx.push_back(4 * k + FS_T);
    }
    return idx;
  };
  return game;
}

Trajectory racing_initial_guess(const GameSpec& game, int p) {
  Trajectory z;
  z.U.assign(game.N, Vec::Zero(game.nu[p]));
  z.X = rollout(game, p, game.x0[p], z.U);
  return z;
}

}  // namespace brnash

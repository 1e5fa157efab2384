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

#include "brnash/toy.hpp"

#include <Eigen/Dense>

namespace brnash {

namespace {
constexpr double kUnbounded = 1e20;
}

GameSpec make_toy_game(const ToyGame& t) {
  GameSpec game;
  game.name = "toy";
  game.N = 1;
  game.dt = t.dt;
  game.nx = {1, 1};
  game.nu = {1, 1};
  game.x0[0] = Vec::Constant(1, t.x1);
  game.x0[1] = Vec::Constant(1, t.x2);

  const double dt = t.dt;
  game.dynamics = [dt](int, const Vec& x, const Vec& u, Mat* A, Mat* B) -> Vec {
    if (A != nullptr) *A = Mat::Constant(1, 1, 1.0);
    if (B != nullptr) *B = Mat::Constant(1, 1, dt);
    return x + dt * u;
  };

  game.stage_cost = [t](int p, int /*k*/, const Vec& /*x*/, const Vec& u, const Vec& /*u_prev*/,
                        Vec* gx, Vec* gu, Vec* gu_prev) -> double {
    const double q = (p == 0) ? t.q1 : t.q2;
    const double r = (p == 0) ? t.r1 : t.r2;
    const double g = (p == 0) ? t.g1 : t.g2;
    const double v = u[0];
    if (gx != nullptr) gx->setZero(1);
    if (gu != nullptr) {
      gu->resize(1);
      (*gu)[0] = q * (v - g) + r * v;
    }
    if (gu_prev != nullptr) gu_prev->setZero(1);
    return 0.5 * q * (v - g) * (v - g) + 0.5 * r * v * v;
  };

  game.terminal_cost = [t](int p, const Vec& x_self, const Vec& x_other, Vec* g_self,
                           Vec* g_other) -> double {
    // Coupling is always (player1 position) - (player2 position) - d.
    const double e = (p == 0) ? (x_self[0] - x_other[0] - t.d) : (x_other[0] - x_self[0] - t.d);
    const double sign_self = (p == 0) ? 1.0 : -1.0;
    if (g_self != nullptr) {
      g_self->resize(1);
      (*g_self)[0] = t.w * e * sign_self;
    }
    if (g_other != nullptr) {
      g_other->resize(1);
      (*g_other)[0] = -t.w * e * sign_self;
    }
    return 0.5 * t.w * e * e;
  };

  game.cost_hessian = [t](int p, Mat* Hxx, Mat* Huu, Mat* Hu_uprev, Mat* Hup_up, Mat* Hxx_term) {
    const double q = (p == 0) ? t.q1 : t.q2;
    const double r = (p == 0) ? t.r1 : t.r2;
    if (Hxx != nullptr) *Hxx = Mat::Zero(1, 1);
    if (Huu != nullptr) *Huu = Mat::Constant(1, 1, q + r);
    if (Hu_uprev != nullptr) *Hu_uprev = Mat::Zero(1, 1);
    if (Hup_up != nullptr) *Hup_up = Mat::Zero(1, 1);
    if (Hxx_term != nullptr) *Hxx_term = Mat::Constant(1, 1, t.w);
  };

  for (int p = 0; p < 2; ++p) {
    game.x_lo[p] = Vec::Constant(1, -kUnbounded);
    game.x_hi[p] = Vec::Constant(1, kUnbounded);
    game.u_lo[p] = Vec::Constant(1, -kUnbounded);
    game.u_hi[p] = Vec::Constant(1, kUnbounded);
  }

  // Either player's problem depends on the opponent only through the
  // opponent's terminal state (flat index 1 of [x_0, x_1]).
  game.coupled_state_indices = [](int) { return std::vector<int>{1}; };
  return game;
}

double toy_br2(double v1, const ToyGame& t) {
  // Stationarity of J_2 in v2: q2 (v2 - g2) + r2 v2 - w (y + v1 - v2) = 0.
  return (t.q2 * t.g2 + t.w * t.y() + t.w * v1) / (t.q2 + t.r2 + t.w);
}

std::pair<double, double> toy_joint_solve(const ToyGame& t) {
  Eigen::Matrix2d A;
  A << t.q1 + t.r1 + t.w, -t.w, -t.w, t.q2 + t.r2 + t.w;
  Eigen::Vector2d b(t.q1 * t.g1 - t.w * t.y(), t.q2 * t.g2 + t.w * t.y());
  Eigen::Vector2d v = A.fullPivLu().solve(b);
  return {v[0], v[1]};
}

Trajectory toy_trajectory(const GameSpec& game, int p, double v) {
  Trajectory z;
  z.U = {Vec::Constant(1, v)};
  z.X = rollout(game, p, game.x0[p], z.U);
  return z;
}

}  // namespace brnash

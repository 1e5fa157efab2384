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

#pragma once

#include <utility>

#include "brnash/game.hpp"

namespace brnash {

// Minimal one-step two-player game with scalar decisions v_1, v_2:
// positions advance by x_i + dt*v_i and the players' costs are
//   J_1 = q1/2 (v1 - g1)^2 + r1/2 v1^2 + w/2 e_c^2
//   J_2 = q2/2 (v2 - g2)^2 + r2/2 v2^2 + w/2 e_c^2
// with coupling e_c = (x_{1,1} - x_{2,1}) - d. With the default parameters
// the derived constant y = (x1 - x2) - d equals -0.5, the unique Nash
// equilibrium is (v1, v2) = (1/3, -1/3), and Player 2's best response is
// v2 = (v1 - 1)/2.
struct ToyGame {
  double dt = 1.0;
  double q1 = 1.0, q2 = 1.0;
  double r1 = 1.0, r2 = 1.0;
  double w = 2.0;
  double d = 0.5;
  double x1 = 0.0, x2 = 0.0;
  double g1 = 1.0, g2 = -1.0;

  double y() const { return (x1 - x2) - d; }
};

// GameSpec instance of the toy game (N = 1, unconstrained, unbounded).
GameSpec make_toy_game(const ToyGame& t = ToyGame{});

// Player 2's closed-form best response; (v1 - 1)/2 at default parameters.
double toy_br2(double v1, const ToyGame& t = ToyGame{});

// Exact solution of the coupled 2x2 stationarity system
//   (q1+r1+w) v1 - w v2 = q1 g1 - w y
//   (q2+r2+w) v2 - w v1 = q2 g2 + w y.
std::pair<double, double> toy_joint_solve(const ToyGame& t = ToyGame{});

// Trajectory for one player's scalar decision (positions by rollout).
Trajectory toy_trajectory(const GameSpec& game, int p, double v);

}  // namespace brnash

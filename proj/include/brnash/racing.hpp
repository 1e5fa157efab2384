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

#include "brnash/frenet.hpp"
#include "brnash/game.hpp"

namespace brnash {

// Head-to-head racing on a quarter-circle arc. Player i's stage cost is
//   r_u ||u_k||^2 + p_du ||u_k - u_{k-1}||^2 + q_v v_k^2      (u_{-1} = 0)
// and the terminal cost rewards own progress against the opponent's:
//   Player 1: q12 s_{2,N} - q11 s_{1,N}
//   Player 2: q21 s_{1,N} - q22 s_{2,N}.
// Both players share the collision-avoidance constraint
//   d_safe^2 - ||p_{1,k} - p_{2,k}||^2 <= 0  for k = 0..N.
//
// The cost weights are artifact defaults (the source problem leaves them
// unspecified); they are configurable through RacingParams / the run config.
struct RacingParams {
  TrackParams track;
  VehicleParams vehicle;
  Bounds bounds = Bounds::benchmark();
  int N = 10;
  double dt = 0.05;

  double r_u = 0.1;
  double p_du = 0.5;
  double q_v = 0.05;
  double q11 = 20.0, q12 = 10.0;
  double q21 = 10.0, q22 = 20.0;
};

// Game instance for one initial-condition pair. The psi component is left
// unbounded in the solver boxes (Table-style psi limits are the wrap domain
// of the dynamics, not an active constraint); harness metrics still check it.
GameSpec make_racing_game(const RacingParams& rp, const Vec& x1_0, const Vec& x2_0);

// Shared warm start used by every solver on racing instances: zero inputs
// and the corresponding constant-speed rollout.
Trajectory racing_initial_guess(const GameSpec& game, int p);

}  // namespace brnash

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

#include "brnash/game.hpp"
#include "brnash/nlp.hpp"

namespace brnash {

// Single-player optimal-control program over the decision stack
// z = [u_0, ..., u_{N-1}, x_0, ..., x_N] with the opponent's trajectory
// frozen. Equalities stack, per step k = 0..N-1, the dynamics defect
// x_{k+1} - f(x_k, u_k) followed by the h rows of step k; inequalities stack
// the g rows for k = 0..N; the initial state is pinned through the box
// (lb = ub = x0).
struct PlayerOcp {
  NLPProblem nlp;
  int player = 0;
  int N = 0;
  int n = 0;  // state dimension
  int m = 0;  // input dimension

  int u_offset(int k) const { return k * m; }
  int x_offset(int k) const { return N * m + k * n; }

  Vec pack(const Trajectory& z) const;
  Trajectory unpack(const Vec& zvec) const;
};

PlayerOcp build_player_ocp(const GameSpec& game, int p, const Trajectory& Z_other);

// Convenience overload: the opponent enters only through states.
PlayerOcp build_player_ocp(const GameSpec& game, int p, const std::vector<Vec>& X_other);

}  // namespace brnash

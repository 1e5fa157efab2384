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

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "brnash/types.hpp"

namespace brnash {

// Two-player finite-horizon dynamic game over discrete dynamics
// x_{k+1} = f_i(x_k, u_k), per-player costs
//   J_i = sum_{k=0}^{N-1} l_i(k, x_{i,k}, u_{i,k}, u_{i,k-1}) + l_{i,N}(x_{1,N}, x_{2,N})
// (u_{i,-1} = 0), per-step coupled inequality constraints g_i <= 0, optional
// per-step equality constraints h_i = 0, and box bounds handled natively by
// the NLP kernel. Players are indexed 0 and 1.
//
// All evaluators are pure functions of their arguments; a GameSpec is
// immutable after construction and safe to share across parallel workers.
// The initial states x0 are instance data: a GameSpec describes one game
// instance (model + initial condition pair).
struct GameSpec {
  int N = 1;
  double dt = 1.0;
  std::array<int, 2> nx{1, 1};
  std::array<int, 2> nu{1, 1};
  std::array<Vec, 2> x0;

  // Discrete dynamics for player p; optional Jacobians A (nx x nx), B (nx x nu).
  std::function<Vec(int p, const Vec& x, const Vec& u, Mat* A, Mat* B)> dynamics;

  // Stage cost at step k in [0, N); u_prev is the player's previous input
  // (zero at k = 0). Optional gradients.
  std::function<double(int p, int k, const Vec& x, const Vec& u, const Vec& u_prev,
                       Vec* gx, Vec* gu, Vec* gu_prev)>
      stage_cost;

  // Terminal cost on both players' terminal states, from player p's view.
  std::function<double(int p, const Vec& x_self, const Vec& x_other, Vec* g_self, Vec* g_other)>
      terminal_cost;

  // Constant stage-cost Hessian blocks (both games in this artifact have
  // quadratic costs with state/input-independent curvature). Optional; the
  // NLP kernel falls back to a Gauss-Newton model when absent.
  // Hxx: nx x nx, Huu: nu x nu, Hu_uprev: nu x nu cross block,
  // Hup_up: nu x nu second derivative in u_prev, and Hxx_term: nx x nx
  // terminal own-state block.
  std::function<void(int p, Mat* Hxx, Mat* Huu, Mat* Hu_uprev, Mat* Hup_up, Mat* Hxx_term)>
      cost_hessian;

  // Per-step inequality rows g <= 0 at step k in [0, N], coupling both
  // players' states at that step; n_ineq_rows rows per step (0 = none).
  int n_ineq_rows = 0;
  std::function<Vec(int p, int k, const Vec& x_self, const Vec& x_other, Mat* J_self, Mat* J_other)>
      stage_ineq;

  // Per-step equality rows h = 0 at step k in [0, N); n_eq_rows per step.
  int n_eq_rows = 0;
  std::function<Vec(int p, int k, const Vec& x, const Vec& u, Mat* Jx, Mat* Ju)> stage_eq;

  // Box bounds used by the solvers (entries may be +-infinity).
  std::array<Vec, 2> x_lo, x_hi, u_lo, u_hi;

  // Flat indices into flatten_states(X_other) that player p's problem
  // actually depends on (through stage_ineq or the terminal cross term).
  // Used to restrict finite-difference best-response Jacobians to the
  // coupled columns; empty means "all columns".
  std::function<std::vector<int>(int p)> coupled_state_indices;

  std::string name;
};

// Total cost J_p(Z_self, Z_other). Throws on dimension mismatch.
double evaluate_cost(const GameSpec& game, int p, const Trajectory& Z_self,
                     const Trajectory& Z_other);

// Stacked constraint values for player p. Equalities: for k = 0..N-1 the
// dynamics defect x_{k+1} - f(x_k, u_k) followed by the h rows of step k.
// Inequalities: the g rows for k = 0..N (feasible means <= 0). Box bounds
// are not included (the solvers handle them natively).
std::pair<Vec, Vec> evaluate_constraints(const GameSpec& game, int p, const Trajectory& Z_self,
                                         const Trajectory& Z_other);

// Forward simulation of player p from x0 under U; returns N+1 states.
std::vector<Vec> rollout(const GameSpec& game, int p, const Vec& x0, const std::vector<Vec>& U);

// Result of a sampled local Nash-consistency probe.
struct NashCheckReport {
  // Largest unilateral cost decrease found for each player among feasible
  // perturbations (values <= ~solver tolerance at a local equilibrium).
  std::array<double, 2> max_improvement{0.0, 0.0};
  std::array<int, 2> n_feasible{0, 0};
  std::array<int, 2> n_probes{0, 0};
  bool candidate_feasible = true;
};

// Samples unilateral input perturbations of each player (uniform in the
// inf-norm ball of the given radius, states recomputed by rollout so probes
// are always dynamically consistent), discards probes that violate bounds or
// g beyond a small tolerance, and reports the largest cost improvement seen.
// Deterministic given seed.
NashCheckReport nash_check(const GameSpec& game, const Trajectory& Z1, const Trajectory& Z2,
                           double radius, int n_samples, std::uint64_t seed);

}  // namespace brnash

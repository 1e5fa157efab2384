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

#include <functional>
#include <limits>
#include <utility>

#include "brnash/game.hpp"
#include "brnash/nlp.hpp"
#include "brnash/ocp.hpp"

namespace brnash {

// Best-response map of one player: given the opponent's state sequence and
// the responder's initial state, produce the responder's plan (and, for the
// reduced solver, its sensitivity to the opponent's states).
//
// evaluate: (X_other with N+1 states, x_self0) -> responder trajectory.
// jacobian: d flatten(evaluate(.)) / d flatten_states(X_other), in the
//   [x_0..x_N, u_0..u_{N-1}] flattening on both axes; columns outside the
//   coupled index set are zero.
//
// Operators may carry internal warm-start / Jacobian-lagging caches; they are
// deterministic for a fixed call sequence but not safe to share across
// threads. Build one operator per worker.
struct BestResponseOperator {
  enum class Kind { Exact, Learned };
  Kind kind = Kind::Exact;
  int responder = 1;  // player index whose plan the operator produces
  std::function<Trajectory(const std::vector<Vec>& X_other, const Vec& x_self0)> evaluate;
  std::function<Mat(const std::vector<Vec>& X_other, const Vec& x_self0)> jacobian;
};

struct BrOperatorOptions {
  double solve_tol = 1e-9;        // KKT tolerance of the inner best-response solves
  double fd_step = 1e-5;          // forward-difference step for the sensitivity
  double jacobian_refresh = 5e-3; // recompute the lagged Jacobian when the opponent
                                  // states move further than this (inf-norm)
  SolverOptions solver;           // budget for the inner solves
};

// Exact best response: solves the responder's optimal-control program with
// the opponent frozen, warm-started across calls. The sensitivity is a
// forward-difference through re-solves, restricted to the game's coupled
// state indices and lagged between refreshes.
BestResponseOperator make_exact_br_operator(const GameSpec& game, int responder,
                                            const BrOperatorOptions& opts = {});

// One-shot best response of player p to the opponent's states: builds and
// solves the player OCP. `init` may be empty (zero-input rollout is used).
std::pair<Trajectory, SolveOutcome> exact_br(const GameSpec& game, int p,
                                             const std::vector<Vec>& X_other,
                                             const Trajectory* init,
                                             const SolverOptions& opts);

// Largest inf-norm deviation of either player's plan from its exact best
// response against the other's states — zero (to solver tolerance) exactly at
// an open-loop Nash point.
double br_residual(const GameSpec& game, const Trajectory& Z1, const Trajectory& Z2,
                   const SolverOptions& opts);

struct EquilibriumOptions {
  double tol = 1e-6;        // fixed-point / KKT tolerance of the outer method
  int max_iterations = 60;  // IBR sweeps or joint Newton iterations
  SolverOptions solver;     // options for inner NLP solves
  BrOperatorOptions br;     // options for best-response operators built internally
  // A "Succeeded" reduced solve is downgraded when a from-scratch best-response
  // recheck at the solution disagrees by more than recheck_factor * tol.
  double recheck_factor = 10.0;
};

struct EquilibriumResult {
  Trajectory Z1, Z2;
  SolveStatus status = SolveStatus::NumericalFailure;
  int iterations = 0;
  double wall_time_s = 0.0;
  // Deviation of Z2 from a fresh best response at the solution (reduced
  // method), or the last sweep's iterate change (IBR); NaN when not computed.
  double br_residual_norm = std::numeric_limits<double>::quiet_NaN();
  KKTResidual kkt;  // reduced: the reduced program's; ibr/joint: worst per player
  double J1 = 0.0, J2 = 0.0;
  Vec lambda, mu;  // multipliers of the method's primary solve (layout varies)
};

// The reduced program over [U_1, X_1, Z_2]: player 1's dynamics and
// constraints, plus the equality block Z_2 = B_2(X_1) that embeds player 2's
// best response as a feasibility condition. The objective reports J_1
// honestly but prescribes only its (U_1, X_1) partial gradient, and the
// coupled inequality rows mask their Z_2 Jacobian columns; at any KKT point
// of this program the best-response block's multipliers vanish, so the KKT
// system coincides with the reduced first-order system of the game.
struct ReducedProblem {
  NLPProblem nlp;
  int N = 0;
  int n1 = 0, m1 = 0, n2 = 0, m2 = 0;
  int x1_offset(int k) const { return N * m1 + k * n1; }
  int u1_offset(int k) const { return k * m1; }
  int z2_offset() const { return N * m1 + (N + 1) * n1; }
  int z2_dim() const { return (N + 1) * n2 + N * m2; }

  Vec pack(const Trajectory& Z1, const Trajectory& Z2) const;
  std::pair<Trajectory, Trajectory> unpack(const Vec& x) const;
};

ReducedProblem build_reduced_problem(const GameSpec& game, const BestResponseOperator& br);

// Solve the reduced program from the given initial plans (either may be
// empty: zero-input rollouts are used, and Z2 is initialized from the
// best response to X1's initial guess).
EquilibriumResult solve_reduced(const GameSpec& game, const BestResponseOperator& br,
                                const Trajectory* Z1_init, const Trajectory* Z2_init,
                                const EquilibriumOptions& opts);

// Iterated best response (Gauss-Seidel sweeps: player 2 responds first).
EquilibriumResult solve_ibr(const GameSpec& game, const Trajectory* Z1_init,
                            const Trajectory* Z2_init, const EquilibriumOptions& opts);

// Joint first-order system of both players: a damped Newton method on the
// stacked per-player KKT conditions with the active set frozen at the
// initial point, falling back to an augmented-Lagrangian solve of the
// stacked (per-player masked) system when the active-set guess fails.
EquilibriumResult solve_joint_kkt(const GameSpec& game, const Trajectory* Z1_init,
                                  const Trajectory* Z2_init, const EquilibriumOptions& opts);

}  // namespace brnash

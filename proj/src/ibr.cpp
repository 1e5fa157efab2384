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

#include <algorithm>
#include <chrono>

#include "brnash/equilibrium.hpp"

namespace brnash {

namespace {

Trajectory zero_input_guess(const GameSpec& game, int p) {
  Trajectory z;
  z.U.assign(game.N, Vec::Zero(game.nu[p]));
  z.X = rollout(game, p, game.x0[p], z.U);
  return z;
}

KKTResidual max_kkt(const KKTResidual& a, const KKTResidual& b) {
  KKTResidual r;
  r.stationarity = std::max(a.stationarity, b.stationarity);
  r.primal_eq = std::max(a.primal_eq, b.primal_eq);
  r.primal_ineq = std::max(a.primal_ineq, b.primal_ineq);
  r.complementarity = std::max(a.complementarity, b.complementarity);
  r.dual_feas = std::max(a.dual_feas, b.dual_feas);
  return r;
}

}  // namespace

EquilibriumResult solve_ibr(const GameSpec& game, const Trajectory* Z1_init,
                            const Trajectory* Z2_init, const EquilibriumOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&](EquilibriumResult& r) -> EquilibriumResult& {
    r.J1 = evaluate_cost(game, 0, r.Z1, r.Z2);
    r.J2 = evaluate_cost(game, 1, r.Z2, r.Z1);
    r.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };

  EquilibriumResult res;
  res.Z1 = (Z1_init && Z1_init->horizon() == game.N) ? *Z1_init : zero_input_guess(game, 0);
  res.Z2 = (Z2_init && Z2_init->horizon() == game.N) ? *Z2_init : zero_input_guess(game, 1);

  SolverOptions sopts = opts.solver;
  sopts.tol = std::min(sopts.tol, 0.1 * opts.tol);

  for (int sweep = 1; sweep <= opts.max_iterations; ++sweep) {
    res.iterations = sweep;

    // Player 2 responds to the current X1, then player 1 to the new X2.
    auto [b2, o2] = exact_br(game, 1, res.Z1.X, &res.Z2, sopts);
    if (o2.status != SolveStatus::Succeeded) {
      res.status = o2.status == SolveStatus::InfeasibleDetected
                       ? SolveStatus::InfeasibleDetected
                       : SolveStatus::NumericalFailure;
      res.Z2 = b2;
      res.kkt = o2.kkt;
      return finish(res);
    }
    auto [b1, o1] = exact_br(game, 0, b2.X, &res.Z1, sopts);
    if (o1.status != SolveStatus::Succeeded) {
      res.status = o1.status == SolveStatus::InfeasibleDetected
                       ? SolveStatus::InfeasibleDetected
                       : SolveStatus::NumericalFailure;
      res.Z1 = b1;
      res.Z2 = b2;
      res.kkt = o1.kkt;
      return finish(res);
    }

    const double change =
        std::max((flatten(b1) - flatten(res.Z1)).cwiseAbs().maxCoeff(),
                 (flatten(b2) - flatten(res.Z2)).cwiseAbs().maxCoeff());
    res.Z1 = b1;
    res.Z2 = b2;
    res.kkt = max_kkt(o1.kkt, o2.kkt);
    res.br_residual_norm = change;
    res.lambda = o1.lambda;
    res.mu = o1.mu;

    if (change <= opts.tol) {
      res.status = SolveStatus::Succeeded;
      return finish(res);
    }
  }

  res.status = SolveStatus::MaxIterExceeded;
  return finish(res);
}

}  // namespace brnash

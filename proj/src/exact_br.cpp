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
#include <memory>
#include <stdexcept>

#include "brnash/equilibrium.hpp"

namespace brnash {

namespace {

Trajectory zero_input_guess(const GameSpec& game, int p, const Vec& x0) {
  Trajectory z;
  z.U.assign(game.N, Vec::Zero(game.nu[p]));
  z.X = rollout(game, p, x0, z.U);
  return z;
}

struct BrCache {
  bool warm_valid = false;
  Vec z_warm;  // last solution, OCP pack order
  // Augmented-Lagrangian state of the last successful solve; warm-starting
  // the multipliers and penalty makes re-solves at nearby opponent plans
  // (line-search probes, finite-difference columns) cost a few Newton steps
  // instead of a full cold multiplier sequence.
  Vec lam_warm, mu_warm;
  double rho_warm = -1.0;
  bool jac_valid = false;
  Vec x_flat_at_jac;  // opponent states at the last Jacobian refresh
  Vec x0_at_jac;      // responder initial state at the last refresh
  Mat J;              // flatten(traj) rows x flatten_states(X_other) columns
  bool eval_valid = false;  // memoized last evaluate() at an exact input match
  Vec x_flat_at_eval;
  Vec x0_at_eval;
  Vec z_at_eval;
};

}  // namespace

std::pair<Trajectory, SolveOutcome> exact_br(const GameSpec& game, int p,
                                             const std::vector<Vec>& X_other,
                                             const Trajectory* init,
                                             const SolverOptions& opts) {
  PlayerOcp ocp = build_player_ocp(game, p, X_other);
  Vec z0;
  if (init && init->horizon() == game.N) {
    z0 = ocp.pack(*init);
  } else {
    z0 = ocp.pack(zero_input_guess(game, p, game.x0[p]));
  }
  SolveOutcome out = solve_nlp(ocp.nlp, z0, opts);
  if (!out.x.allFinite()) {
    out.x = z0;
    out.status = SolveStatus::NumericalFailure;
  }
  return {ocp.unpack(out.x), out};
}

BestResponseOperator make_exact_br_operator(const GameSpec& game, int responder,
                                            const BrOperatorOptions& opts) {
  if (responder < 0 || responder > 1)
    throw std::invalid_argument("make_exact_br_operator: responder must be 0 or 1");

  auto gs = std::make_shared<GameSpec>(game);
  auto cache = std::make_shared<BrCache>();
  auto options = std::make_shared<BrOperatorOptions>(opts);
  options->solver.tol = options->solve_tol;

  const int p = responder;
  const int n = game.nx[p];
  const int m = game.nu[p];
  const int N = game.N;
  const int n_o = game.nx[1 - p];
  const int z_dim = (N + 1) * n + N * m;
  const int xo_dim = (N + 1) * n_o;

  // Core solve shared by evaluate() and the finite-difference columns.
  // Returns the solution in OCP pack order; never returns non-finite values.
  // *certified reports whether the solver met its tolerance, which gates the
  // evaluate() memo below.
  auto solve_at = [gs, cache, options, p, N](const std::vector<Vec>& X_other, const Vec& x0,
                                             const Vec* warm, bool* certified = nullptr) -> Vec {
    gs->x0[p] = x0;
    PlayerOcp ocp = build_player_ocp(*gs, p, X_other);
    Vec z0;
    bool have_warm = false;
    if (warm && warm->size() == ocp.nlp.n) {
      z0 = *warm;
      have_warm = true;
    } else if (cache->warm_valid && cache->z_warm.size() == ocp.nlp.n) {
      z0 = cache->z_warm;
      have_warm = true;
    } else {
      z0 = ocp.pack(zero_input_guess(*gs, p, x0));
    }
    SolverOptions sopts = options->solver;
    const bool mult_warm = have_warm && cache->rho_warm > 0.0 &&
                           cache->lam_warm.size() == ocp.nlp.p &&
                           cache->mu_warm.size() == ocp.nlp.q;
    if (mult_warm) {
      sopts.lambda0 = cache->lam_warm;
      sopts.mu0 = cache->mu_warm;
      sopts.rho_init = cache->rho_warm;
    }
    SolveOutcome out = solve_nlp(ocp.nlp, z0, sopts);
    if (mult_warm && out.status != SolveStatus::Succeeded &&
        out.status != SolveStatus::InfeasibleDetected) {
      // A stale multiplier estimate can mislead after a large jump in the
      // opponent's plan; fall back to the cold sequence before giving up.
      // Infeasibility is a property of the subproblem, not of the warm
      // start, so that verdict stands without the expensive retry.
      out = solve_nlp(ocp.nlp, z0, options->solver);
    }
    if (out.status == SolveStatus::Succeeded) {
      cache->lam_warm = out.lambda;
      cache->mu_warm = out.mu;
      cache->rho_warm = std::min(out.rho_final, 1e6);
    }
    if (certified) *certified = out.status == SolveStatus::Succeeded;
    if (!out.x.allFinite()) out.x = ocp.pack(zero_input_guess(*gs, p, x0));
    return out.x;
  };

  auto pack_to_traj = [n, m, N](const Vec& z) {
    Trajectory t;
    t.U.resize(N);
    t.X.resize(N + 1);
    for (int k = 0; k < N; ++k) t.U[k] = z.segment(k * m, m);
    for (int k = 0; k <= N; ++k) t.X[k] = z.segment(N * m + k * n, n);
    return t;
  };

  BestResponseOperator op;
  op.kind = BestResponseOperator::Kind::Exact;
  op.responder = responder;

  op.evaluate = [solve_at, pack_to_traj, cache](const std::vector<Vec>& X_other,
                                                const Vec& x0) -> Trajectory {
    // Exact-match memo: the solver evaluates the same point several times per
    // iteration (merit value, gradient, accepted-step bookkeeping). Only
    // certified solves are replayed, so a memo hit is as trustworthy as a
    // fresh solve at the same input.
    const Vec x_flat = flatten_states(X_other);
    if (cache->eval_valid && cache->x0_at_eval.size() == x0.size() &&
        (cache->x0_at_eval - x0).cwiseAbs().maxCoeff() == 0.0 &&
        cache->x_flat_at_eval.size() == x_flat.size() &&
        (cache->x_flat_at_eval - x_flat).cwiseAbs().maxCoeff() == 0.0) {
      return pack_to_traj(cache->z_at_eval);
    }
    bool certified = false;
    Vec z = solve_at(X_other, x0, nullptr, &certified);
    cache->z_warm = z;
    cache->warm_valid = true;
    if (certified) {
      cache->eval_valid = true;
      cache->x_flat_at_eval = x_flat;
      cache->x0_at_eval = x0;
      cache->z_at_eval = z;
    }
    return pack_to_traj(z);
  };

  op.jacobian = [solve_at, pack_to_traj, gs, cache, options, p, n_o, z_dim, xo_dim](
                    const std::vector<Vec>& X_other, const Vec& x0) -> Mat {
    const Vec x_flat = flatten_states(X_other);
    if (cache->jac_valid && cache->x0_at_jac.size() == x0.size() &&
        (cache->x0_at_jac - x0).cwiseAbs().maxCoeff() == 0.0 &&
        cache->x_flat_at_jac.size() == x_flat.size() &&
        (cache->x_flat_at_jac - x_flat).cwiseAbs().maxCoeff() <= options->jacobian_refresh) {
      return cache->J;
    }

    bool base_ok = false;
    Vec z_base = solve_at(X_other, x0, nullptr, &base_ok);
    if (!base_ok) {
      // Differentiating through a failed solve produces noise, not a
      // sensitivity. Keep the last trustworthy Jacobian if there is one
      // (it is lagged anyway); otherwise report no coupling. Neither is
      // recorded as fresh, so the next healthy call recomputes.
      return cache->jac_valid ? cache->J : Mat::Zero(z_dim, xo_dim);
    }
    cache->z_warm = z_base;
    cache->warm_valid = true;
    const Vec f_base = flatten(pack_to_traj(z_base));

    std::vector<int> cols = gs->coupled_state_indices
                                ? gs->coupled_state_indices(p)
                                : std::vector<int>{};
    if (cols.empty()) {
      cols.resize(xo_dim);
      for (int j = 0; j < xo_dim; ++j) cols[j] = j;
    }

    const double h = options->fd_step;
    Mat J = Mat::Zero(z_dim, xo_dim);
    std::vector<Vec> Xp = X_other;
    for (int idx : cols) {
      const int k = idx / n_o;
      const int i = idx % n_o;
      const double saved = Xp[k][i];
      Xp[k][i] = saved + h;
      bool col_ok = false;
      Vec z_pert = solve_at(Xp, x0, &z_base, &col_ok);
      Xp[k][i] = saved;
      if (col_ok) {
        J.col(idx) = (flatten(pack_to_traj(z_pert)) - f_base) / h;
      } else if (cache->jac_valid) {
        J.col(idx) = cache->J.col(idx);
      }
    }

    cache->jac_valid = true;
    cache->x_flat_at_jac = x_flat;
    cache->x0_at_jac = x0;
    cache->J = J;
    return J;
  };

  return op;
}

double br_residual(const GameSpec& game, const Trajectory& Z1, const Trajectory& Z2,
                   const SolverOptions& opts) {
  const Trajectory b1 = exact_br(game, 0, Z2.X, &Z1, opts).first;
  const Trajectory b2 = exact_br(game, 1, Z1.X, &Z2, opts).first;
  const double r1 = (flatten(b1) - flatten(Z1)).cwiseAbs().maxCoeff();
  const double r2 = (flatten(b2) - flatten(Z2)).cwiseAbs().maxCoeff();
  return std::max(r1, r2);
}

}  // namespace brnash

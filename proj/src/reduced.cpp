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

#include <chrono>
#include <cmath>
#include <memory>

#include "brnash/equilibrium.hpp"

namespace brnash {

namespace {

Trajectory zero_input_guess(const GameSpec& game, int p) {
  Trajectory z;
  z.U.assign(game.N, Vec::Zero(game.nu[p]));
  z.X = rollout(game, p, game.x0[p], z.U);
  return z;
}

}  // namespace

Vec ReducedProblem::pack(const Trajectory& Z1, const Trajectory& Z2) const {
  Vec x(nlp.n);
  for (int k = 0; k < N; ++k) x.segment(u1_offset(k), m1) = Z1.U[k];
  for (int k = 0; k <= N; ++k) x.segment(x1_offset(k), n1) = Z1.X[k];
  x.segment(z2_offset(), z2_dim()) = flatten(Z2);
  return x;
}

std::pair<Trajectory, Trajectory> ReducedProblem::unpack(const Vec& x) const {
  Trajectory Z1;
  Z1.U.resize(N);
  Z1.X.resize(N + 1);
  for (int k = 0; k < N; ++k) Z1.U[k] = x.segment(u1_offset(k), m1);
  for (int k = 0; k <= N; ++k) Z1.X[k] = x.segment(x1_offset(k), n1);
  Trajectory Z2 = unflatten(x.segment(z2_offset(), z2_dim()), n2, m2, N);
  return {Z1, Z2};
}

ReducedProblem build_reduced_problem(const GameSpec& game, const BestResponseOperator& br) {
  ReducedProblem rp;
  rp.N = game.N;
  rp.n1 = game.nx[0];
  rp.m1 = game.nu[0];
  rp.n2 = game.nx[1];
  rp.m2 = game.nu[1];

  const int N = rp.N;
  const int n1 = rp.n1, m1 = rp.m1, n2 = rp.n2, m2 = rp.m2;
  const int x1_off = N * m1;
  const int z2_off = rp.z2_offset();
  const int z2_dim = rp.z2_dim();
  const int ndec = z2_off + z2_dim;
  const int n_h = game.n_eq_rows;
  const int n_g = game.n_ineq_rows;
  const int rows_per_step = n1 + n_h;
  const int p1_rows = N * rows_per_step;
  const int p_eq = p1_rows + z2_dim;
  const int q_ineq = (N + 1) * n_g;

  auto gs = std::make_shared<const GameSpec>(game);
  auto brp = std::make_shared<const BestResponseOperator>(br);

  NLPProblem nlp;
  nlp.n = ndec;
  nlp.p = p_eq;
  nlp.q = q_ineq;
  nlp.gradient_is_partial = true;
  nlp.name = "reduced";

  // ---- objective: honest J1 value, partial gradient over (U1, X1) only ----
  nlp.objective = [gs, N, n1, m1, n2, x1_off, z2_off, ndec](const Vec& z, Vec* grad) {
    double f = 0.0;
    if (grad) grad->setZero(ndec);
    Vec u_prev = Vec::Zero(m1);
    Vec gx(n1), gu(m1), gup(m1);
    for (int k = 0; k < N; ++k) {
      const Vec x = z.segment(x1_off + n1 * k, n1);
      const Vec u = z.segment(m1 * k, m1);
      f += gs->stage_cost(0, k, x, u, u_prev, grad ? &gx : nullptr, grad ? &gu : nullptr,
                          grad ? &gup : nullptr);
      if (grad) {
        grad->segment(x1_off + n1 * k, n1) += gx;
        grad->segment(m1 * k, m1) += gu;
        if (k > 0) grad->segment(m1 * (k - 1), m1) += gup;
      }
      u_prev = u;
    }
    // Terminal cost sees the opponent's terminal state from the Z2 block;
    // its Z2 gradient is deliberately not reported (best-response masking).
    const Vec x1N = z.segment(x1_off + n1 * N, n1);
    const Vec x2N = z.segment(z2_off + n2 * N, n2);
    Vec gxN(n1);
    f += gs->terminal_cost(0, x1N, x2N, grad ? &gxN : nullptr, nullptr);
    if (grad) grad->segment(x1_off + n1 * N, n1) += gxN;
    return f;
  };

  // ---- constant objective Hessian: player-1 blocks only ------------------
  {
    Mat Hxx, Huu, Hu_up, Hup_up, Hxx_term;
    game.cost_hessian(0, &Hxx, &Huu, &Hu_up, &Hup_up, &Hxx_term);
    Mat H = Mat::Zero(ndec, ndec);
    for (int k = 0; k < N; ++k) {
      H.block(m1 * k, m1 * k, m1, m1) += Huu;
      H.block(x1_off + n1 * k, x1_off + n1 * k, n1, n1) += Hxx;
      if (k > 0) {
        H.block(m1 * k, m1 * (k - 1), m1, m1) += Hu_up;
        H.block(m1 * (k - 1), m1 * k, m1, m1) += Hu_up.transpose();
        H.block(m1 * (k - 1), m1 * (k - 1), m1, m1) += Hup_up;
      }
    }
    H.block(x1_off + n1 * N, x1_off + n1 * N, n1, n1) += Hxx_term;
    nlp.objective_hessian = [H](const Vec&, Mat* out) { *out = H; };
  }

  // ---- equalities: player-1 dynamics/h rows, then Z2 - B2(X1) -------------
  nlp.eq = [gs, brp, N, n1, m1, n_h, rows_per_step, p1_rows, p_eq, x1_off, z2_off, z2_dim,
            ndec](const Vec& z, Vec* val, Mat* J) {
    if (val) val->setZero(p_eq);
    if (J) J->setZero(p_eq, ndec);
    Mat A(n1, n1), B(n1, m1);
    for (int k = 0; k < N; ++k) {
      const Vec x = z.segment(x1_off + n1 * k, n1);
      const Vec u = z.segment(m1 * k, m1);
      const Vec xn = gs->dynamics(0, x, u, J ? &A : nullptr, J ? &B : nullptr);
      const int row = k * rows_per_step;
      if (val) val->segment(row, n1) = z.segment(x1_off + n1 * (k + 1), n1) - xn;
      if (J) {
        J->block(row, x1_off + n1 * (k + 1), n1, n1) = Mat::Identity(n1, n1);
        J->block(row, x1_off + n1 * k, n1, n1) = -A;
        J->block(row, m1 * k, n1, m1) = -B;
      }
      if (n_h > 0) {
        Mat Jhx(n_h, n1), Jhu(n_h, m1);
        Vec h = gs->stage_eq(0, k, x, u, J ? &Jhx : nullptr, J ? &Jhu : nullptr);
        if (val) val->segment(row + n1, n_h) = h;
        if (J) {
          J->block(row + n1, x1_off + n1 * k, n_h, n1) = Jhx;
          J->block(row + n1, m1 * k, n_h, m1) = Jhu;
        }
      }
    }

    // Best-response block: Z2 - B2(X1) with Jacobian [-dB2/dX1, I].
    std::vector<Vec> X1(N + 1);
    for (int k = 0; k <= N; ++k) X1[k] = z.segment(x1_off + n1 * k, n1);
    if (val) {
      const Trajectory b = brp->evaluate(X1, gs->x0[1]);
      val->segment(p1_rows, z2_dim) = z.segment(z2_off, z2_dim) - flatten(b);
    }
    if (J) {
      const Mat Jbr = brp->jacobian(X1, gs->x0[1]);
      J->block(p1_rows, x1_off, z2_dim, (N + 1) * n1) = -Jbr;
      J->block(p1_rows, z2_off, z2_dim, z2_dim) = Mat::Identity(z2_dim, z2_dim);
    }
  };

  // ---- inequalities: player-1 g rows with masked Z2 columns ---------------
  if (q_ineq > 0) {
    nlp.ineq = [gs, N, n1, n2, n_g, q_ineq, x1_off, z2_off, ndec](const Vec& z, Vec* val,
                                                                  Mat* J) {
      if (val) val->setZero(q_ineq);
      if (J) J->setZero(q_ineq, ndec);
      Mat Jg_self(n_g, n1);
      for (int k = 0; k <= N; ++k) {
        const Vec x1 = z.segment(x1_off + n1 * k, n1);
        const Vec x2 = z.segment(z2_off + n2 * k, n2);
        Vec g = gs->stage_ineq(0, k, x1, x2, J ? &Jg_self : nullptr, nullptr);
        if (val) val->segment(k * n_g, n_g) = g;
        // The Z2 columns of this Jacobian are intentionally zero: player 1
        // does not differentiate through the opponent's states here, which is
        // what forces the best-response block's multipliers to vanish.
        if (J) J->block(k * n_g, x1_off + n1 * k, n_g, n1) = Jg_self;
      }
    };
  }

  // ---- box bounds ----------------------------------------------------------
  nlp.lb = Vec::Constant(ndec, -kInfBound);
  nlp.ub = Vec::Constant(ndec, kInfBound);
  for (int k = 0; k < N; ++k) {
    nlp.lb.segment(m1 * k, m1) = game.u_lo[0];
    nlp.ub.segment(m1 * k, m1) = game.u_hi[0];
  }
  for (int k = 0; k <= N; ++k) {
    nlp.lb.segment(x1_off + n1 * k, n1) = game.x_lo[0];
    nlp.ub.segment(x1_off + n1 * k, n1) = game.x_hi[0];
  }
  nlp.lb.segment(x1_off, n1) = game.x0[0];
  nlp.ub.segment(x1_off, n1) = game.x0[0];
  // Z2 block: opponent state/input boxes, initial state pinned.
  for (int k = 0; k <= N; ++k) {
    nlp.lb.segment(z2_off + n2 * k, n2) = game.x_lo[1];
    nlp.ub.segment(z2_off + n2 * k, n2) = game.x_hi[1];
  }
  for (int k = 0; k < N; ++k) {
    nlp.lb.segment(z2_off + (N + 1) * n2 + m2 * k, m2) = game.u_lo[1];
    nlp.ub.segment(z2_off + (N + 1) * n2 + m2 * k, m2) = game.u_hi[1];
  }
  nlp.lb.segment(z2_off, n2) = game.x0[1];
  nlp.ub.segment(z2_off, n2) = game.x0[1];

  rp.nlp = std::move(nlp);
  return rp;
}

EquilibriumResult solve_reduced(const GameSpec& game, const BestResponseOperator& br,
                                const Trajectory* Z1_init, const Trajectory* Z2_init,
                                const EquilibriumOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  EquilibriumResult res;

  ReducedProblem rp = build_reduced_problem(game, br);

  Trajectory Z1 = (Z1_init && Z1_init->horizon() == game.N) ? *Z1_init
                                                            : zero_input_guess(game, 0);
  Trajectory Z2;
  bool z2_ready = false;
  // Initialize the opponent block on the best-response manifold.
  try {
    Z2 = br.evaluate(Z1.X, game.x0[1]);
    z2_ready = flatten(Z2).allFinite();
  } catch (...) {
    z2_ready = false;
  }
  if (!z2_ready) {
    Z2 = (Z2_init && Z2_init->horizon() == game.N) ? *Z2_init : zero_input_guess(game, 1);
  }

  SolverOptions sopts = opts.solver;
  sopts.tol = opts.tol;
  SolveOutcome out = solve_nlp(rp.nlp, rp.pack(Z1, Z2), sopts);

  auto [Z1s, Z2s] = rp.unpack(out.x);
  res.Z1 = Z1s;
  res.Z2 = Z2s;
  res.status = out.status;
  res.iterations = out.iterations;
  res.kkt = out.kkt;
  res.lambda = out.lambda;
  res.mu = out.mu;

  // From-scratch best-response recheck at the solution: the method only
  // reports success when the fixed point is genuinely consistent.
  try {
    const Trajectory b2 = br.evaluate(res.Z1.X, game.x0[1]);
    const Vec diff = flatten(b2) - flatten(res.Z2);
    res.br_residual_norm = diff.size() > 0 ? diff.cwiseAbs().maxCoeff() : 0.0;
  } catch (...) {
    res.br_residual_norm = std::numeric_limits<double>::quiet_NaN();
  }
  if (res.status == SolveStatus::Succeeded &&
      !(res.br_residual_norm <= opts.recheck_factor * opts.tol)) {
    res.status = SolveStatus::MaxIterExceeded;
  }

  res.J1 = evaluate_cost(game, 0, res.Z1, res.Z2);
  res.J2 = evaluate_cost(game, 1, res.Z2, res.Z1);
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace brnash

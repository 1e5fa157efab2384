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
#include <cmath>
#include <memory>
#include <vector>

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

// Index bookkeeping for the stacked per-player first-order system. Each
// player's primal block uses the OCP pack order [U; X].
struct JointLayout {
  int N = 0;
  std::array<int, 2> n{}, m{};
  std::array<int, 2> ndec{}, p_eq{};
  int n_h = 0, n_g = 0;

  explicit JointLayout(const GameSpec& g) {
    N = g.N;
    n_h = g.n_eq_rows;
    n_g = g.n_ineq_rows;
    for (int i = 0; i < 2; ++i) {
      n[i] = g.nx[i];
      m[i] = g.nu[i];
      ndec[i] = N * m[i] + (N + 1) * n[i];
      p_eq[i] = N * (n[i] + n_h);
    }
  }

  int u_off(int i, int k) const { return k * m[i]; }
  int x_off(int i, int k) const { return N * m[i] + k * n[i]; }
};

// Per-player pieces evaluated at a joint primal point (z1, z2).
struct PlayerEval {
  Vec grad;   // partial gradient of J_i w.r.t. z_i
  Vec c;      // defects + h rows
  Mat Jc;     // w.r.t. z_i
  Vec g;      // all inequality rows, k = 0..N
  Mat Jg_self;   // w.r.t. z_i
};

bool eval_player(const GameSpec& game, const JointLayout& L, int i, const Vec& zi,
                 const Vec& zo, PlayerEval& E) {
  const int N = L.N, n = L.n[i], m = L.m[i], no = L.n[1 - i];
  const int rows_per_step = n + L.n_h;
  E.grad.setZero(L.ndec[i]);
  E.c.setZero(L.p_eq[i]);
  E.Jc.setZero(L.p_eq[i], L.ndec[i]);
  const int q = (N + 1) * L.n_g;
  E.g.setZero(q);
  E.Jg_self.setZero(q, L.ndec[i]);

  Vec u_prev = Vec::Zero(m);
  Vec gx(n), gu(m), gup(m);
  Mat A(n, n), B(n, m);
  for (int k = 0; k < N; ++k) {
    const Vec x = zi.segment(L.x_off(i, k), n);
    const Vec u = zi.segment(L.u_off(i, k), m);
    game.stage_cost(i, k, x, u, u_prev, &gx, &gu, &gup);
    E.grad.segment(L.x_off(i, k), n) += gx;
    E.grad.segment(L.u_off(i, k), m) += gu;
    if (k > 0) E.grad.segment(L.u_off(i, k - 1), m) += gup;
    u_prev = u;

    const Vec xn = game.dynamics(i, x, u, &A, &B);
    const int row = k * rows_per_step;
    E.c.segment(row, n) = zi.segment(L.x_off(i, k + 1), n) - xn;
    E.Jc.block(row, L.x_off(i, k + 1), n, n) = Mat::Identity(n, n);
    E.Jc.block(row, L.x_off(i, k), n, n) = -A;
    E.Jc.block(row, L.u_off(i, k), n, m) = -B;
    if (L.n_h > 0) {
      Mat Jhx(L.n_h, n), Jhu(L.n_h, m);
      Vec h = game.stage_eq(i, k, x, u, &Jhx, &Jhu);
      E.c.segment(row + n, L.n_h) = h;
      E.Jc.block(row + n, L.x_off(i, k), L.n_h, n) = Jhx;
      E.Jc.block(row + n, L.u_off(i, k), L.n_h, m) = Jhu;
    }
  }
  Vec gxN(n);
  game.terminal_cost(i, zi.segment(L.x_off(i, N), n), zo.segment(L.x_off(1 - i, N), no),
                     &gxN, nullptr);
  E.grad.segment(L.x_off(i, N), n) += gxN;

  if (L.n_g > 0) {
    Mat Js(L.n_g, n);
    for (int k = 0; k <= N; ++k) {
      const Vec xs = zi.segment(L.x_off(i, k), n);
      const Vec xo = zo.segment(L.x_off(1 - i, k), no);
      Vec gk = game.stage_ineq(i, k, xs, xo, &Js, nullptr);
      E.g.segment(k * L.n_g, L.n_g) = gk;
      E.Jg_self.block(k * L.n_g, L.x_off(i, k), L.n_g, n) = Js;
    }
  }
  return E.grad.allFinite() && E.c.allFinite() && E.Jc.allFinite() && E.g.allFinite() &&
         E.Jg_self.allFinite();
}

// Stacked masked program over [z1; z2]: per-player partial gradients,
// per-player constraint copies with cross-player Jacobian columns masked.
NLPProblem build_stacked_problem(const GameSpec& game, const JointLayout& L) {
  auto gs = std::make_shared<const GameSpec>(game);
  const int d1 = L.ndec[0], d2 = L.ndec[1];
  const int ndec = d1 + d2;
  const int q_per = (L.N + 1) * L.n_g;

  NLPProblem nlp;
  nlp.n = ndec;
  nlp.p = L.p_eq[0] + L.p_eq[1];
  nlp.q = 2 * q_per;
  nlp.gradient_is_partial = true;
  nlp.name = "joint_stacked";

  JointLayout Lc = L;

  nlp.objective = [gs, Lc, d1, d2, ndec](const Vec& z, Vec* grad) {
    double f = 0.0;
    if (grad) grad->setZero(ndec);
    for (int i = 0; i < 2; ++i) {
      const Vec zi = i == 0 ? z.head(d1) : z.tail(d2);
      const Vec zo = i == 0 ? z.tail(d2) : z.head(d1);
      const int base = i == 0 ? 0 : d1;
      const int N = Lc.N, n = Lc.n[i], m = Lc.m[i];
      Vec u_prev = Vec::Zero(m);
      Vec gx(n), gu(m), gup(m);
      for (int k = 0; k < N; ++k) {
        const Vec x = zi.segment(Lc.x_off(i, k), n);
        const Vec u = zi.segment(Lc.u_off(i, k), m);
        f += gs->stage_cost(i, k, x, u, u_prev, grad ? &gx : nullptr, grad ? &gu : nullptr,
                            grad ? &gup : nullptr);
        if (grad) {
          grad->segment(base + Lc.x_off(i, k), n) += gx;
          grad->segment(base + Lc.u_off(i, k), m) += gu;
          if (k > 0) grad->segment(base + Lc.u_off(i, k - 1), m) += gup;
        }
        u_prev = u;
      }
      Vec gxN(n);
      f += gs->terminal_cost(i, zi.segment(Lc.x_off(i, N), n),
                             zo.segment(Lc.x_off(1 - i, N), Lc.n[1 - i]),
                             grad ? &gxN : nullptr, nullptr);
      if (grad) grad->segment(base + Lc.x_off(i, N), n) += gxN;
    }
    return f;
  };

  {
    Mat H = Mat::Zero(ndec, ndec);
    for (int i = 0; i < 2; ++i) {
      Mat Hxx, Huu, Hu_up, Hup_up, Hxx_term;
      game.cost_hessian(i, &Hxx, &Huu, &Hu_up, &Hup_up, &Hxx_term);
      const int base = i == 0 ? 0 : d1;
      const int N = L.N, n = L.n[i], m = L.m[i];
      for (int k = 0; k < N; ++k) {
        H.block(base + L.u_off(i, k), base + L.u_off(i, k), m, m) += Huu;
        H.block(base + L.x_off(i, k), base + L.x_off(i, k), n, n) += Hxx;
        if (k > 0) {
          H.block(base + L.u_off(i, k), base + L.u_off(i, k - 1), m, m) += Hu_up;
          H.block(base + L.u_off(i, k - 1), base + L.u_off(i, k), m, m) += Hu_up.transpose();
          H.block(base + L.u_off(i, k - 1), base + L.u_off(i, k - 1), m, m) += Hup_up;
        }
      }
      H.block(base + L.x_off(i, N), base + L.x_off(i, N), n, n) += Hxx_term;
    }
    nlp.objective_hessian = [H](const Vec&, Mat* out) { *out = H; };
  }

  nlp.eq = [gs, Lc, d1, d2, ndec](const Vec& z, Vec* val, Mat* J) {
    const int p1 = Lc.p_eq[0];
    const int p_all = p1 + Lc.p_eq[1];
    if (val) val->setZero(p_all);
    if (J) J->setZero(p_all, ndec);
    for (int i = 0; i < 2; ++i) {
      const Vec zi = i == 0 ? z.head(d1) : z.tail(d2);
      const int base = i == 0 ? 0 : d1;
      const int row0 = i == 0 ? 0 : p1;
      const int N = Lc.N, n = Lc.n[i], m = Lc.m[i];
      const int rows_per_step = n + Lc.n_h;
      Mat A(n, n), B(n, m);
      for (int k = 0; k < N; ++k) {
        const Vec x = zi.segment(Lc.x_off(i, k), n);
        const Vec u = zi.segment(Lc.u_off(i, k), m);
        const Vec xn = gs->dynamics(i, x, u, J ? &A : nullptr, J ? &B : nullptr);
        const int row = row0 + k * rows_per_step;
        if (val) val->segment(row, n) = zi.segment(Lc.x_off(i, k + 1), n) - xn;
        if (J) {
          J->block(row, base + Lc.x_off(i, k + 1), n, n) = Mat::Identity(n, n);
          J->block(row, base + Lc.x_off(i, k), n, n) = -A;
          J->block(row, base + Lc.u_off(i, k), n, m) = -B;
        }
        if (Lc.n_h > 0) {
          Mat Jhx(Lc.n_h, n), Jhu(Lc.n_h, m);
          Vec h = gs->stage_eq(i, k, x, u, J ? &Jhx : nullptr, J ? &Jhu : nullptr);
          if (val) val->segment(row + n, Lc.n_h) = h;
          if (J) {
            J->block(row + n, base + Lc.x_off(i, k), Lc.n_h, n) = Jhx;
            J->block(row + n, base + Lc.u_off(i, k), Lc.n_h, m) = Jhu;
          }
        }
      }
    }
  };

  if (L.n_g > 0) {
    nlp.ineq = [gs, Lc, d1, d2, ndec, q_per](const Vec& z, Vec* val, Mat* J) {
      if (val) val->setZero(2 * q_per);
      if (J) J->setZero(2 * q_per, ndec);
      for (int i = 0; i < 2; ++i) {
        const Vec zi = i == 0 ? z.head(d1) : z.tail(d2);
        const Vec zo = i == 0 ? z.tail(d2) : z.head(d1);
        const int base = i == 0 ? 0 : d1;
        const int row0 = i == 0 ? 0 : q_per;
        Mat Js(Lc.n_g, Lc.n[i]);
        for (int k = 0; k <= Lc.N; ++k) {
          const Vec xs = zi.segment(Lc.x_off(i, k), Lc.n[i]);
          const Vec xo = zo.segment(Lc.x_off(1 - i, k), Lc.n[1 - i]);
          Vec gk = gs->stage_ineq(i, k, xs, xo, J ? &Js : nullptr, nullptr);
          if (val) val->segment(row0 + k * Lc.n_g, Lc.n_g) = gk;
          // Cross-player columns are masked: each player treats the other's
          // motion as a parameter in its own first-order conditions.
          if (J) J->block(row0 + k * Lc.n_g, base + Lc.x_off(i, k), Lc.n_g, Lc.n[i]) = Js;
        }
      }
    };
  }

  nlp.lb = Vec::Constant(ndec, -kInfBound);
  nlp.ub = Vec::Constant(ndec, kInfBound);
  for (int i = 0; i < 2; ++i) {
    const int base = i == 0 ? 0 : d1;
    for (int k = 0; k < L.N; ++k) {
      nlp.lb.segment(base + L.u_off(i, k), L.m[i]) = game.u_lo[i];
      nlp.ub.segment(base + L.u_off(i, k), L.m[i]) = game.u_hi[i];
    }
    for (int k = 0; k <= L.N; ++k) {
      nlp.lb.segment(base + L.x_off(i, k), L.n[i]) = game.x_lo[i];
      nlp.ub.segment(base + L.x_off(i, k), L.n[i]) = game.x_hi[i];
    }
    nlp.lb.segment(base + L.x_off(i, 0), L.n[i]) = game.x0[i];
    nlp.ub.segment(base + L.x_off(i, 0), L.n[i]) = game.x0[i];
  }

  return nlp;
}

}  // namespace

EquilibriumResult solve_joint_kkt(const GameSpec& game, const Trajectory* Z1_init,
                                  const Trajectory* Z2_init, const EquilibriumOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const JointLayout L(game);
  const int d1 = L.ndec[0], d2 = L.ndec[1];
  const int q_per = (L.N + 1) * L.n_g;

  PlayerOcp ocp_shape[2] = {build_player_ocp(game, 0, std::vector<Vec>(L.N + 1, game.x0[1])),
                            build_player_ocp(game, 1, std::vector<Vec>(L.N + 1, game.x0[0]))};

  Trajectory T1 = (Z1_init && Z1_init->horizon() == game.N) ? *Z1_init
                                                            : zero_input_guess(game, 0);
  Trajectory T2 = (Z2_init && Z2_init->horizon() == game.N) ? *Z2_init
                                                            : zero_input_guess(game, 1);
  Vec z1 = ocp_shape[0].pack(T1);
  Vec z2 = ocp_shape[1].pack(T2);

  // Freeze the active inequality set at the initial point.
  std::array<std::vector<int>, 2> act;
  {
    PlayerEval E1, E2;
    bool init_ok = false;
    try {
      init_ok = eval_player(game, L, 0, z1, z2, E1) && eval_player(game, L, 1, z2, z1, E2);
    } catch (const std::exception&) {
      init_ok = false;
    }
    if (init_ok) {
      for (int i = 0; i < 2; ++i) {
        const Vec& g = i == 0 ? E1.g : E2.g;
        for (int r = 0; r < g.size(); ++r)
          if (g[r] >= -1e-6) act[i].push_back(r);
      }
    }
  }
  const int na1 = static_cast<int>(act[0].size());
  const int na2 = static_cast<int>(act[1].size());

  // Unknown vector: [z1; z2; lam1; nu1; mu1_act; lam2; nu2; mu2_act].
  const int off_l1 = d1 + d2;
  const int off_nu1 = off_l1 + L.p_eq[0];
  const int off_mu1 = off_nu1 + L.n[0];
  const int off_l2 = off_mu1 + na1;
  const int off_nu2 = off_l2 + L.p_eq[1];
  const int off_mu2 = off_nu2 + L.n[1];
  const int wdim = off_mu2 + na2;

  auto residual = [&](const Vec& w) -> Vec {
    Vec R = Vec::Constant(wdim, std::numeric_limits<double>::quiet_NaN());
    const Vec za = w.head(d1);
    const Vec zb = w.segment(d1, d2);
    PlayerEval E1, E2;
    // Newton iterates are not box-projected here, so the dynamics can be
    // probed outside their domain (e.g. steering past the slip-angle
    // singularity); treat that exactly like a non-finite residual.
    try {
      if (!eval_player(game, L, 0, za, zb, E1)) return R;
      if (!eval_player(game, L, 1, zb, za, E2)) return R;
    } catch (const std::exception&) {
      return R;
    }
    R.setZero();

    for (int i = 0; i < 2; ++i) {
      const PlayerEval& E = i == 0 ? E1 : E2;
      const int base = i == 0 ? 0 : d1;
      const int off_l = i == 0 ? off_l1 : off_l2;
      const int off_nu = i == 0 ? off_nu1 : off_nu2;
      const int off_mu = i == 0 ? off_mu1 : off_mu2;
      const int na = i == 0 ? na1 : na2;
      const Vec& zi = i == 0 ? za : zb;

      Vec stat = E.grad + E.Jc.transpose() * w.segment(off_l, L.p_eq[i]);
      stat.segment(L.x_off(i, 0), L.n[i]) += w.segment(off_nu, L.n[i]);
      for (int a = 0; a < na; ++a)
        stat += w[off_mu + a] * E.Jg_self.row(act[i][a]).transpose();
      R.segment(base, L.ndec[i]) = stat;

      R.segment(off_l, L.p_eq[i]) = E.c;
      R.segment(off_nu, L.n[i]) =
          zi.segment(L.x_off(i, 0), L.n[i]) - game.x0[i];
      for (int a = 0; a < na; ++a) R[off_mu + a] = E.g[act[i][a]];
    }
    return R;
  };

  EquilibriumResult res;
  int newton_iters = 0;
  bool phase1_ok = false;

  // ---- phase 1: damped Newton on the stacked first-order system ----------
  {
    Vec w = Vec::Zero(wdim);
    w.head(d1) = z1;
    w.segment(d1, d2) = z2;
    Vec R = residual(w);
    double nu_lm = 1e-12;
    const double target = std::min(1e-9, 0.1 * opts.tol);

    if (R.allFinite()) {
      for (int it = 0; it < opts.max_iterations; ++it) {
        if (R.cwiseAbs().maxCoeff() <= target) break;
        ++newton_iters;
        Mat Jr = finite_diff_jacobian(
            [&](const Vec& ww) {
              Vec r = residual(ww);
              return r.allFinite() ? r : Vec(Vec::Constant(wdim, 1e30));
            },
            w, 1e-6);
        if (!Jr.allFinite()) break;
        const Mat JtJ = Jr.transpose() * Jr;
        const Vec Jtr = Jr.transpose() * R;
        bool accepted = false;
        for (int attempt = 0; attempt < 20; ++attempt) {
          Mat M = JtJ;
          M.diagonal().array() += nu_lm;
          Eigen::LDLT<Mat> ldlt(M);
          const Vec delta = ldlt.solve(-Jtr);
          if (ldlt.info() != Eigen::Success || !delta.allFinite()) {
            nu_lm = std::max(nu_lm * 10.0, 1e-10);
            continue;
          }
          const Vec wt = w + delta;
          const Vec Rt = residual(wt);
          if (Rt.allFinite() && Rt.norm() < R.norm()) {
            w = wt;
            R = Rt;
            accepted = true;
            nu_lm = std::max(nu_lm * 0.3, 1e-12);
            break;
          }
          nu_lm = std::max(nu_lm * 10.0, 1e-10);
        }
        if (!accepted) break;
      }
    }

    if (R.allFinite() && R.cwiseAbs().maxCoeff() <= 1e3) {
      // Verify against each player's full program (boxes, inactive rows,
      // dual signs) before accepting the frozen-active-set solution.
      const Vec za = w.head(d1);
      const Vec zb = w.segment(d1, d2);
      Trajectory Za = ocp_shape[0].unpack(za);
      Trajectory Zb = ocp_shape[1].unpack(zb);

      std::array<Vec, 2> mu_full = {Vec::Zero(q_per), Vec::Zero(q_per)};
      bool duals_ok = true;
      for (int i = 0; i < 2; ++i) {
        const int off_mu = i == 0 ? off_mu1 : off_mu2;
        const int na = i == 0 ? na1 : na2;
        for (int a = 0; a < na; ++a) {
          const double mv = w[off_mu + a];
          if (mv < -opts.tol) duals_ok = false;
          mu_full[i][act[i][a]] = std::max(0.0, mv);
        }
      }

      PlayerOcp o1 = build_player_ocp(game, 0, Zb.X);
      PlayerOcp o2 = build_player_ocp(game, 1, Za.X);
      bool box_ok = (za.array() >= o1.nlp.lb.array() - opts.tol).all() &&
                    (za.array() <= o1.nlp.ub.array() + opts.tol).all() &&
                    (zb.array() >= o2.nlp.lb.array() - opts.tol).all() &&
                    (zb.array() <= o2.nlp.ub.array() + opts.tol).all();

      if (duals_ok && box_ok) {
        const KKTResidual k1 =
            kkt_residual(o1.nlp, za, w.segment(off_l1, L.p_eq[0]), mu_full[0]);
        const KKTResidual k2 =
            kkt_residual(o2.nlp, zb, w.segment(off_l2, L.p_eq[1]), mu_full[1]);
        const KKTResidual worst = max_kkt(k1, k2);
        if (worst.max_component() <= opts.tol) {
          res.Z1 = Za;
          res.Z2 = Zb;
          res.status = SolveStatus::Succeeded;
          res.iterations = std::max(newton_iters, 1);
          res.kkt = worst;
          res.lambda = w.segment(off_l1, L.p_eq[0] + L.n[0] + na1 + L.p_eq[1] + L.n[1] + na2);
          res.mu = Vec(0);
          phase1_ok = true;
        }
      }
      if (!phase1_ok && R.allFinite()) {
        // Keep the phase-1 iterate as the fallback's starting point.
        z1 = za;
        z2 = zb;
      }
    }
  }

  // ---- phase 2: augmented-Lagrangian solve of the stacked masked system ---
  if (!phase1_ok) {
    NLPProblem stacked = build_stacked_problem(game, L);
    Vec x0(d1 + d2);
    x0.head(d1) = z1.allFinite() ? z1 : ocp_shape[0].pack(zero_input_guess(game, 0));
    x0.tail(d2) = z2.allFinite() ? z2 : ocp_shape[1].pack(zero_input_guess(game, 1));

    SolverOptions sopts = opts.solver;
    sopts.tol = opts.tol;
    SolveOutcome out = solve_nlp(stacked, x0, sopts);

    res.Z1 = ocp_shape[0].unpack(out.x.head(d1));
    res.Z2 = ocp_shape[1].unpack(out.x.tail(d2));
    res.status = out.status;
    res.iterations = newton_iters + out.iterations;
    res.kkt = out.kkt;
    res.lambda = out.lambda;
    res.mu = out.mu;

    if (out.status == SolveStatus::Succeeded) {
      // Safety net: confirm each player's own program agrees.
      PlayerOcp o1 = build_player_ocp(game, 0, res.Z2.X);
      PlayerOcp o2 = build_player_ocp(game, 1, res.Z1.X);
      const KKTResidual k1 = kkt_residual(o1.nlp, out.x.head(d1), out.lambda.head(L.p_eq[0]),
                                          out.mu.size() > 0 ? Vec(out.mu.head(q_per)) : Vec(0));
      const KKTResidual k2 =
          kkt_residual(o2.nlp, out.x.tail(d2), out.lambda.tail(L.p_eq[1]),
                       out.mu.size() > 0 ? Vec(out.mu.tail(q_per)) : Vec(0));
      const KKTResidual worst = max_kkt(k1, k2);
      res.kkt = worst;
      if (worst.max_component() > 10.0 * opts.tol) res.status = SolveStatus::MaxIterExceeded;
    }
  }

  res.J1 = evaluate_cost(game, 0, res.Z1, res.Z2);
  res.J2 = evaluate_cost(game, 1, res.Z2, res.Z1);
  res.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace brnash

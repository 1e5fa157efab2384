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

#include <doctest.h>

#include <cmath>

#include "brnash/frenet.hpp"
#include "brnash/game.hpp"
#include "brnash/racing.hpp"
#include "brnash/rng.hpp"
#include "brnash/toy.hpp"

using namespace brnash;

TEST_CASE("toy closed-form equilibrium") {
  const ToyGame t;
  CHECK(t.y() == -0.5);
  auto [v1, v2] = toy_joint_solve(t);
  CHECK(v1 == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(v2 == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  // The equilibrium is a best-response fixed point.
  CHECK(toy_br2(v1, t) == doctest::Approx(v2).epsilon(1e-12));
  // And the best response is the affine map (v1 - 1)/2 at defaults.
  for (double v : {-1.0, 0.0, 0.4, 2.0})
    CHECK(toy_br2(v, t) == doctest::Approx((v - 1.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("toy cost at the equilibrium is 11/36 for both players") {
  const ToyGame t;
  GameSpec game = make_toy_game(t);
  auto [v1, v2] = toy_joint_solve(t);
  Trajectory Z1 = toy_trajectory(game, 0, v1);
  Trajectory Z2 = toy_trajectory(game, 1, v2);
  CHECK(evaluate_cost(game, 0, Z1, Z2) == doctest::Approx(11.0 / 36.0).epsilon(1e-12));
  CHECK(evaluate_cost(game, 1, Z2, Z1) == doctest::Approx(11.0 / 36.0).epsilon(1e-12));
}

TEST_CASE("toy game matches its analytic cost at arbitrary decisions") {
  const ToyGame t;
  GameSpec game = make_toy_game(t);
  auto analytic = [&](int p, double v_self, double v_other) {
    const double q = p == 0 ? t.q1 : t.q2;
    const double r = p == 0 ? t.r1 : t.r2;
    const double g = p == 0 ? t.g1 : t.g2;
    const double v1 = p == 0 ? v_self : v_other;
    const double v2 = p == 0 ? v_other : v_self;
    const double e = (t.x1 + t.dt * v1) - (t.x2 + t.dt * v2) - t.d;
    return 0.5 * q * (v_self - g) * (v_self - g) + 0.5 * r * v_self * v_self +
           0.5 * t.w * e * e;
  };
  Rng r(41);
  for (int i = 0; i < 50; ++i) {
    const double a = r.uniform(-2.0, 2.0), b = r.uniform(-2.0, 2.0);
    Trajectory Z1 = toy_trajectory(game, 0, a);
    Trajectory Z2 = toy_trajectory(game, 1, b);
    CHECK(evaluate_cost(game, 0, Z1, Z2) == doctest::Approx(analytic(0, a, b)).epsilon(1e-12));
    CHECK(evaluate_cost(game, 1, Z2, Z1) == doctest::Approx(analytic(1, b, a)).epsilon(1e-12));
  }
}

TEST_CASE("toy cost gradients match central differences") {
  GameSpec game = make_toy_game();
  Rng r(43);
  const double h = 1e-6;
  for (int i = 0; i < 40; ++i) {
    const int p = static_cast<int>(r.uniform_index(2));
    Vec x = Vec::Constant(1, r.uniform(-1.0, 1.0));
    Vec u = Vec::Constant(1, r.uniform(-1.0, 1.0));
    Vec up = Vec::Constant(1, 0.0);
    Vec gx(1), gu(1), gup(1);
    game.stage_cost(p, 0, x, u, up, &gx, &gu, &gup);
    Vec uh = u;
    uh[0] += h;
    const double fp = game.stage_cost(p, 0, x, uh, up, nullptr, nullptr, nullptr);
    uh[0] -= 2 * h;
    const double fm = game.stage_cost(p, 0, x, uh, up, nullptr, nullptr, nullptr);
    CHECK(gu[0] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-7));

    Vec xs = Vec::Constant(1, r.uniform(-1.0, 1.0));
    Vec xo = Vec::Constant(1, r.uniform(-1.0, 1.0));
    Vec gs(1), go(1);
    game.terminal_cost(p, xs, xo, &gs, &go);
    Vec xh = xs;
    xh[0] += h;
    const double tp1 = game.terminal_cost(p, xh, xo, nullptr, nullptr);
    xh[0] -= 2 * h;
    const double tm1 = game.terminal_cost(p, xh, xo, nullptr, nullptr);
    CHECK(gs[0] == doctest::Approx((tp1 - tm1) / (2 * h)).epsilon(1e-7));
    Vec oh = xo;
    oh[0] += h;
    const double tp2 = game.terminal_cost(p, xs, oh, nullptr, nullptr);
    oh[0] -= 2 * h;
    const double tm2 = game.terminal_cost(p, xs, oh, nullptr, nullptr);
    CHECK(go[0] == doctest::Approx((tp2 - tm2) / (2 * h)).epsilon(1e-7));
  }
}

namespace {

GameSpec benchmark_game() {
  RacingParams rp;
  Vec x1(4), x2(4);
  x1 << 1.0, 0.0, 1.0, 0.2;
  x2 << 1.1, 0.1, 0.8, -0.2;
  return make_racing_game(rp, x1, x2);
}

Trajectory random_bounded_plan(const GameSpec& game, int p, std::uint64_t seed) {
  Rng r(seed);
  Trajectory z;
  z.U.resize(game.N);
  for (int k = 0; k < game.N; ++k) {
    z.U[k].resize(game.nu[p]);
    for (int i = 0; i < game.nu[p]; ++i)
      z.U[k][i] = r.uniform(game.u_lo[p][i], game.u_hi[p][i]);
  }
  z.X = rollout(game, p, game.x0[p], z.U);
  return z;
}

}  // namespace

TEST_CASE("rollout produces exactly zero dynamics defects") {
  GameSpec game = benchmark_game();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (int p = 0; p < 2; ++p) {
      Trajectory self = random_bounded_plan(game, p, seed * 2 + p);
      Trajectory other = random_bounded_plan(game, 1 - p, seed * 2 + 1 - p);
      auto [c, g] = evaluate_constraints(game, p, self, other);
      REQUIRE(c.size() == game.N * 4);
      // Defects are x_{k+1} - f(x_k, u_k) with X generated by the same f:
      // identical floating-point operations, so the result is exactly zero.
      CHECK(c.cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("racing collision row equals the squared-form constraint") {
  GameSpec game = benchmark_game();
  // Coincident positions: the row must read d_safe^2 = 0.0625 (violated).
  Vec x(4);
  x << 1.0, 0.0, 1.0, 0.1;
  Vec row = game.stage_ineq(0, 0, x, x, nullptr, nullptr);
  REQUIRE(row.size() == 1);
  CHECK(row[0] == doctest::Approx(0.0625).epsilon(1e-15));

  // Generic positions: match collision_constraint_sq directly.
  RacingParams rp;
  Rng r(47);
  for (int i = 0; i < 50; ++i) {
    Vec a(4), b(4);
    a << 1, 0, r.uniform(0.0, rp.track.s_max), r.uniform(-0.5, 0.5);
    b << 1, 0, r.uniform(0.0, rp.track.s_max), r.uniform(-0.5, 0.5);
    const double want = collision_constraint_sq(a, b, rp.track, rp.bounds.d_safe);
    CHECK(game.stage_ineq(0, 0, a, b, nullptr, nullptr)[0] ==
          doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("racing stage-ineq Jacobians match central differences") {
  GameSpec game = benchmark_game();
  Rng r(53);
  const double h = 1e-6;
  for (int i = 0; i < 30; ++i) {
    Vec a(4), b(4);
    a << r.uniform(0.1, 2.0), r.uniform(-0.5, 0.5), r.uniform(0.0, 5.0), r.uniform(-0.5, 0.5);
    b << r.uniform(0.1, 2.0), r.uniform(-0.5, 0.5), r.uniform(0.0, 5.0), r.uniform(-0.5, 0.5);
    Mat Js, Jo;
    game.stage_ineq(0, 0, a, b, &Js, &Jo);
    for (int j = 0; j < 4; ++j) {
      Vec ah = a;
      ah[j] += h;
      const double fp = game.stage_ineq(0, 0, ah, b, nullptr, nullptr)[0];
      ah[j] -= 2 * h;
      const double fm = game.stage_ineq(0, 0, ah, b, nullptr, nullptr)[0];
      CHECK(Js(0, j) == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-6).scale(1.0));

      Vec bh = b;
      bh[j] += h;
      const double gp = game.stage_ineq(0, 0, a, bh, nullptr, nullptr)[0];
      bh[j] -= 2 * h;
      const double gm = game.stage_ineq(0, 0, a, bh, nullptr, nullptr)[0];
      CHECK(Jo(0, j) == doctest::Approx((gp - gm) / (2 * h)).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("racing terminal cost is linear in arc progress") {
  RacingParams rp;
  GameSpec game = benchmark_game();
  Rng r(59);
  for (int i = 0; i < 30; ++i) {
    Vec xs(4), xo(4);
    xs << r.uniform(0, 2), r.uniform(-1, 1), r.uniform(0, 5), r.uniform(-0.5, 0.5);
    xo << r.uniform(0, 2), r.uniform(-1, 1), r.uniform(0, 5), r.uniform(-0.5, 0.5);
    Vec gs, go;
    const double f1 = game.terminal_cost(0, xs, xo, &gs, &go);
    CHECK(f1 == doctest::Approx(rp.q12 * xo[FS_S] - rp.q11 * xs[FS_S]).epsilon(1e-14));
    CHECK(gs[FS_S] == -rp.q11);
    CHECK(go[FS_S] == rp.q12);
    CHECK(gs[FS_V] == 0.0);
    CHECK(go[FS_T] == 0.0);
    const double f2 = game.terminal_cost(1, xo, xs, nullptr, nullptr);
    CHECK(f2 == doctest::Approx(rp.q21 * xs[FS_S] - rp.q22 * xo[FS_S]).epsilon(1e-14));
  }
}

TEST_CASE("racing stage cost formula and curvature blocks") {
  RacingParams rp;
  GameSpec game = benchmark_game();
  Rng r(61);
  for (int i = 0; i < 30; ++i) {
    Vec x(4), u(2), up(2);
    x << r.uniform(0, 2), r.uniform(-1, 1), r.uniform(0, 5), r.uniform(-0.5, 0.5);
    u << r.uniform(-2, 2), r.uniform(-0.4, 0.4);
    up << r.uniform(-2, 2), r.uniform(-0.4, 0.4);
    const double want = rp.r_u * u.squaredNorm() + rp.p_du * (u - up).squaredNorm() +
                        rp.q_v * x[FS_V] * x[FS_V];
    CHECK(game.stage_cost(0, 3, x, u, up, nullptr, nullptr, nullptr) ==
          doctest::Approx(want).epsilon(1e-13));
  }

  Mat Hxx, Huu, Huup, Hupup, Hterm;
  game.cost_hessian(0, &Hxx, &Huu, &Huup, &Hupup, &Hterm);
  CHECK(Hxx(FS_V, FS_V) == doctest::Approx(2 * rp.q_v).epsilon(1e-15));
  CHECK(Huu(0, 0) == doctest::Approx(2 * (rp.r_u + rp.p_du)).epsilon(1e-15));
  CHECK(Huu(0, 1) == 0.0);
  CHECK(Huup(1, 1) == doctest::Approx(-2 * rp.p_du).epsilon(1e-15));
  CHECK(Hupup(0, 0) == doctest::Approx(2 * rp.p_du).epsilon(1e-15));
  CHECK(Hterm.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("racing dynamics agree with the euler step for both players") {
  RacingParams rp;
  GameSpec game = benchmark_game();
  Rng r(67);
  for (int i = 0; i < 20; ++i) {
    Vec x(4), u(2);
    x << r.uniform(0.1, 2), r.uniform(-1, 1), r.uniform(0, 5), r.uniform(-0.45, 0.45);
    u << r.uniform(-2, 2), r.uniform(-0.4, 0.4);
    for (int p = 0; p < 2; ++p) {
      const Vec got = game.dynamics(p, x, u, nullptr, nullptr);
      const Eigen::Vector4d want =
          euler_step(x, u, rp.dt, rp.track, rp.vehicle);
      CHECK((got - Vec(want)).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("racing coupled indices cover (s, t) at every step") {
  GameSpec game = benchmark_game();
  REQUIRE(static_cast<bool>(game.coupled_state_indices));
  for (int p = 0; p < 2; ++p) {
    const auto idx = game.coupled_state_indices(p);
    REQUIRE(static_cast<int>(idx.size()) == 2 * (game.N + 1));
    for (int k = 0; k <= game.N; ++k) {
      CHECK(idx[2 * k] == 4 * k + FS_S);
      CHECK(idx[2 * k + 1] == 4 * k + FS_T);
    }
  }
}

TEST_CASE("racing solver boxes leave psi unbounded") {
  GameSpec game = benchmark_game();
  for (int p = 0; p < 2; ++p) {
    CHECK(game.x_lo[p][FS_PSI] <= -1e19);
    CHECK(game.x_hi[p][FS_PSI] >= 1e19);
    CHECK(game.x_lo[p][FS_V] == 0.0);
    CHECK(game.x_hi[p][FS_V] == 2.0);
  }
}

TEST_CASE("make_racing_game rejects wrong initial-state dimensions") {
  RacingParams rp;
  CHECK_THROWS_AS(make_racing_game(rp, Vec::Zero(3), Vec::Zero(4)), std::invalid_argument);
  CHECK_THROWS_AS(make_racing_game(rp, Vec::Zero(4), Vec::Zero(5)), std::invalid_argument);
}

TEST_CASE("nash_check accepts the toy equilibrium and rejects a non-equilibrium") {
  GameSpec game = make_toy_game();
  auto [v1, v2] = toy_joint_solve();
  Trajectory Z1 = toy_trajectory(game, 0, v1);
  Trajectory Z2 = toy_trajectory(game, 1, v2);
  auto at_ne = nash_check(game, Z1, Z2, 1e-2, 200, 99);
  CHECK(at_ne.candidate_feasible);
  CHECK(at_ne.n_probes[0] == 200);
  CHECK(at_ne.n_feasible[0] == 200);  // unconstrained game: every probe kept
  CHECK(at_ne.max_improvement[0] <= 1e-6);
  CHECK(at_ne.max_improvement[1] <= 1e-6);

  Trajectory W1 = toy_trajectory(game, 0, 0.0);
  Trajectory W2 = toy_trajectory(game, 1, 0.0);
  auto off = nash_check(game, W1, W2, 1e-2, 200, 99);
  // At (0,0) player 1's cost falls at rate |dJ1/dv1| = 2 along v1, so probes
  // of radius 1e-2 find improvements of roughly that scale.
  CHECK(std::max(off.max_improvement[0], off.max_improvement[1]) > 1e-3);
}

TEST_CASE("nash_check is deterministic in its seed") {
  GameSpec game = benchmark_game();
  Trajectory Z1 = racing_initial_guess(game, 0);
  Trajectory Z2 = racing_initial_guess(game, 1);
  auto a = nash_check(game, Z1, Z2, 1e-2, 100, 7);
  auto b = nash_check(game, Z1, Z2, 1e-2, 100, 7);
  CHECK(a.max_improvement[0] == b.max_improvement[0]);
  CHECK(a.max_improvement[1] == b.max_improvement[1]);
  CHECK(a.n_feasible[0] == b.n_feasible[0]);
  CHECK(a.n_feasible[1] == b.n_feasible[1]);
}

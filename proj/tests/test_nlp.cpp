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

#include "brnash/nlp.hpp"
#include "brnash/rng.hpp"

using namespace brnash;

namespace {

NLPProblem unconstrained_quadratic() {
  NLPProblem P;
  P.n = 1;
  P.objective = [](const Vec& x, Vec* g) {
    if (g) (*g) = Vec::Constant(1, 2.0 * (x[0] - 2.0));
    return (x[0] - 2.0) * (x[0] - 2.0);
  };
  P.lb = Vec::Constant(1, -kInfBound);
  P.ub = Vec::Constant(1, kInfBound);
  P.name = "quad1d";
  return P;
}

// min x^2  s.t.  1 - x <= 0.  Solution x* = 1 with multiplier mu* = 2.
NLPProblem inequality_quadratic() {
  NLPProblem P;
  P.n = 1;
  P.q = 1;
  P.objective = [](const Vec& x, Vec* g) {
    if (g) (*g) = Vec::Constant(1, 2.0 * x[0]);
    return x[0] * x[0];
  };
  P.ineq = [](const Vec& x, Vec* v, Mat* J) {
    if (v) (*v) = Vec::Constant(1, 1.0 - x[0]);
    if (J) (*J) = Mat::Constant(1, 1, -1.0);
  };
  P.lb = Vec::Constant(1, -kInfBound);
  P.ub = Vec::Constant(1, kInfBound);
  P.name = "ineq_quad";
  return P;
}

// min x^2 + y^2  s.t.  x + y = 1.  Solution (1/2, 1/2), lambda* = -1
// (stationarity 2x + lambda = 0).
NLPProblem equality_quadratic() {
  NLPProblem P;
  P.n = 2;
  P.p = 1;
  P.objective = [](const Vec& x, Vec* g) {
    if (g) (*g) = 2.0 * x;
    return x.squaredNorm();
  };
  P.eq = [](const Vec& x, Vec* v, Mat* J) {
    if (v) (*v) = Vec::Constant(1, x[0] + x[1] - 1.0);
    if (J) (*J) = Mat::Ones(1, 2);
  };
  P.lb = Vec::Constant(2, -kInfBound);
  P.ub = Vec::Constant(2, kInfBound);
  P.name = "eq_quad";
  return P;
}

// Rosenbrock restricted to a box whose corner cuts off the free minimum:
// min (1-x)^2 + 100 (y - x^2)^2  s.t.  x <= 0.5.  Optimum sits on the bound
// at x = 0.5, y = 0.25.
NLPProblem boxed_rosenbrock() {
  NLPProblem P;
  P.n = 2;
  P.objective = [](const Vec& z, Vec* g) {
    const double x = z[0], y = z[1];
    if (g) {
      (*g) = Vec(2);
      (*g)[0] = -2.0 * (1.0 - x) - 400.0 * x * (y - x * x);
      (*g)[1] = 200.0 * (y - x * x);
    }
    return (1.0 - x) * (1.0 - x) + 100.0 * (y - x * x) * (y - x * x);
  };
  P.lb = Vec::Constant(2, -kInfBound);
  P.ub = Vec::Constant(2, kInfBound);
  P.ub[0] = 0.5;
  P.name = "boxed_rosenbrock";
  return P;
}

}  // namespace

TEST_CASE("unconstrained quadratic reaches its vertex") {
  SolverOptions o;
  o.tol = 1e-10;
  auto out = solve_nlp(unconstrained_quadratic(), Vec::Zero(1), o);
  REQUIRE(out.status == SolveStatus::Succeeded);
  CHECK(out.x[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(out.objective == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(out.kkt.max_component() <= 1e-10);
}

TEST_CASE("active inequality yields the known multiplier") {
  SolverOptions o;
  o.tol = 1e-9;
  auto out = solve_nlp(inequality_quadratic(), Vec::Zero(1), o);
  REQUIRE(out.status == SolveStatus::Succeeded);
  CHECK(out.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  REQUIRE(out.mu.size() == 1);
  CHECK(out.mu[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(out.kkt.max_component() <= 1e-9);
}

TEST_CASE("equality QP splits the budget evenly") {
  SolverOptions o;
  o.tol = 1e-9;
  auto out = solve_nlp(equality_quadratic(), Vec::Zero(2), o);
  REQUIRE(out.status == SolveStatus::Succeeded);
  CHECK(out.x[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(out.x[1] == doctest::Approx(0.5).epsilon(1e-7));
  REQUIRE(out.lambda.size() == 1);
  CHECK(out.lambda[0] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("box bound is respected and becomes active") {
  SolverOptions o;
  o.tol = 1e-8;
  auto out = solve_nlp(boxed_rosenbrock(), Vec::Zero(2), o);
  REQUIRE(out.status == SolveStatus::Succeeded);
  CHECK(out.x[0] <= 0.5 + 1e-12);
  CHECK(out.x[0] == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(out.x[1] == doctest::Approx(0.25).epsilon(1e-6));
  // Projected stationarity certifies optimality on the bound even though the
  // raw gradient there is nonzero.
  CHECK(out.kkt.stationarity <= 1e-8);
}

TEST_CASE("infeasible equalities are detected") {
  NLPProblem P;
  P.n = 1;
  P.p = 2;
  P.objective = [](const Vec& x, Vec* g) {
    if (g) (*g) = 2.0 * x;
    return x.squaredNorm();
  };
  // x = 0 and x = 1 cannot hold together.
  P.eq = [](const Vec& x, Vec* v, Mat* J) {
    if (v) {
      (*v) = Vec(2);
      (*v)[0] = x[0];
      (*v)[1] = x[0] - 1.0;
    }
    if (J) {
      (*J) = Mat::Ones(2, 1);
    }
  };
  P.lb = Vec::Constant(1, -kInfBound);
  P.ub = Vec::Constant(1, kInfBound);
  auto out = solve_nlp(P, Vec::Zero(1), {});
  CHECK(out.status == SolveStatus::InfeasibleDetected);
}

TEST_CASE("solves are deterministic") {
  SolverOptions o;
  o.tol = 1e-9;
  auto a = solve_nlp(boxed_rosenbrock(), Vec::Constant(2, -1.0), o);
  auto b = solve_nlp(boxed_rosenbrock(), Vec::Constant(2, -1.0), o);
  REQUIRE(a.status == b.status);
  CHECK(a.x[0] == b.x[0]);
  CHECK(a.x[1] == b.x[1]);
  CHECK(a.iterations == b.iterations);
  CHECK(a.objective == b.objective);
}

TEST_CASE("multiplier warm start converges to the same point") {
  SolverOptions o;
  o.tol = 1e-9;
  NLPProblem P = inequality_quadratic();
  auto cold = solve_nlp(P, Vec::Zero(1), o);
  REQUIRE(cold.status == SolveStatus::Succeeded);

  SolverOptions w = o;
  w.lambda0 = cold.lambda;
  w.mu0 = cold.mu;
  w.rho_init = cold.rho_final;
  auto warm = solve_nlp(P, cold.x, w);
  REQUIRE(warm.status == SolveStatus::Succeeded);
  CHECK(warm.x[0] == doctest::Approx(cold.x[0]).epsilon(1e-9));
  CHECK(warm.mu[0] == doctest::Approx(cold.mu[0]).epsilon(1e-6));
  // Warm restart at the solution should need almost no work.
  CHECK(warm.iterations <= cold.iterations);
  CHECK(warm.outer_iterations <= 2);
}

TEST_CASE("warm-start vectors of the wrong size are ignored") {
  SolverOptions w;
  w.tol = 1e-9;
  w.lambda0 = Vec::Ones(5);  // problem has p = 0: must be ignored, not crash
  w.mu0 = Vec::Ones(3);      // problem has q = 1: ignored as well
  auto out = solve_nlp(inequality_quadratic(), Vec::Zero(1), w);
  REQUIRE(out.status == SolveStatus::Succeeded);
  CHECK(out.x[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("penalty never decreases across a solve") {
  SolverOptions o;
  o.tol = 1e-9;
  o.rho0 = 10.0;
  auto out = solve_nlp(equality_quadratic(), Vec::Zero(2), o);
  CHECK(out.rho_final >= o.rho0);
}

TEST_CASE("time limit trips MaxIterExceeded") {
  NLPProblem P = boxed_rosenbrock();
  SolverOptions o;
  o.tol = 1e-14;       // unreachable
  o.time_limit_s = 0;  // expire immediately
  auto out = solve_nlp(P, Vec::Constant(2, -1.5), o);
  CHECK(out.status == SolveStatus::MaxIterExceeded);
}

TEST_CASE("kkt_residual components on hand-checkable points") {
  NLPProblem P = inequality_quadratic();
  // At the optimum with the exact multiplier: everything vanishes.
  auto at_opt = kkt_residual(P, Vec::Constant(1, 1.0), Vec(), Vec::Constant(1, 2.0));
  CHECK(at_opt.stationarity == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(at_opt.primal_ineq == 0.0);
  CHECK(at_opt.complementarity == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  CHECK(at_opt.dual_feas == 0.0);

  // At x = 0 with mu = 0: stationarity 0 (gradient 2x = 0), primal violation 1.
  auto at_zero = kkt_residual(P, Vec::Zero(1), Vec(), Vec::Zero(1));
  CHECK(at_zero.stationarity == 0.0);
  CHECK(at_zero.primal_ineq == 1.0);

  // Wrong multiplier at the optimum: stationarity |2 - mu| = 1, comp |mu*g| = 0.
  auto wrong = kkt_residual(P, Vec::Constant(1, 1.0), Vec(), Vec::Constant(1, 1.0));
  CHECK(wrong.stationarity == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(wrong.complementarity == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));

  // Negative multiplier shows up in dual feasibility.
  auto neg = kkt_residual(P, Vec::Constant(1, 1.0), Vec(), Vec::Constant(1, -0.5));
  CHECK(neg.dual_feas == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("finite-difference oracles match analytic derivatives") {
  Rng r(71);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x[i] = r.uniform(-1.0, 1.0);

    auto f = [](const Vec& z) {
      return std::sin(z[0]) * z[1] + std::exp(0.3 * z[2]) + z[0] * z[0] * z[2];
    };
    Vec g = finite_diff_gradient(f, x, 1e-6);
    CHECK(g[0] == doctest::Approx(std::cos(x[0]) * x[1] + 2 * x[0] * x[2]).epsilon(1e-7));
    CHECK(g[1] == doctest::Approx(std::sin(x[0])).epsilon(1e-7));
    CHECK(g[2] == doctest::Approx(0.3 * std::exp(0.3 * x[2]) + x[0] * x[0]).epsilon(1e-7));

    auto vf = [](const Vec& z) {
      Vec out(2);
      out[0] = z[0] * z[1];
      out[1] = z[2] * z[2] * z[2];
      return out;
    };
    Mat J = finite_diff_jacobian(vf, x, 1e-6);
    REQUIRE(J.rows() == 2);
    REQUIRE(J.cols() == 3);
    CHECK(J(0, 0) == doctest::Approx(x[1]).epsilon(1e-8));
    CHECK(J(0, 1) == doctest::Approx(x[0]).epsilon(1e-8));
    CHECK(J(0, 2) == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    CHECK(J(1, 2) == doctest::Approx(3 * x[2] * x[2]).epsilon(1e-6));
  }
}

TEST_CASE("prescribed-field mode still lands on the fixed point") {
  // A two-dimensional problem whose "gradient" is not the derivative of the
  // reported value: the field G(x) = [x0 - 1, x1 + 2] vanishes at (1, -2)
  // while the value channel reports an unrelated constant. This mimics the
  // per-player partial gradients of the stacked and reduced formulations.
  NLPProblem P;
  P.n = 2;
  P.gradient_is_partial = true;
  P.objective = [](const Vec& x, Vec* g) {
    if (g) {
      (*g) = Vec(2);
      (*g)[0] = x[0] - 1.0;
      (*g)[1] = x[1] + 2.0;
    }
    return 7.0;
  };
  P.lb = Vec::Constant(2, -kInfBound);
  P.ub = Vec::Constant(2, kInfBound);
  SolverOptions o;
  o.tol = 1e-10;
  auto out = solve_nlp(P, Vec::Zero(2), o);
  REQUIRE(out.status == SolveStatus::Succeeded);
  CHECK(out.x[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out.x[1] == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(out.objective == 7.0);  // value channel reported untouched
}

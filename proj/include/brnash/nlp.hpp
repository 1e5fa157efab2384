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
#include <string>

#include "brnash/types.hpp"

namespace brnash {

// Box entries at or beyond this magnitude are treated as unbounded.
inline constexpr double kInfBound = 1e20;

// Smooth constrained program
//   min f(x)  s.t.  c(x) = 0,  g(x) <= 0,  lb <= x <= ub.
//
// Evaluators must be deterministic. Gradient/Jacobian output arguments are
// optional (callers pass nullptr when only values are needed).
struct NLPProblem {
  int n = 0;  // decision dimension
  int p = 0;  // number of equality rows
  int q = 0;  // number of inequality rows

  // Objective value; fills *grad (size n) when non-null.
  std::function<double(const Vec& x, Vec* grad)> objective;
  // Equality values (size p); fills *J (p x n) when non-null.
  std::function<void(const Vec& x, Vec* val, Mat* J)> eq;
  // Inequality values (size q, feasible <= 0); fills *J (q x n) when non-null.
  std::function<void(const Vec& x, Vec* val, Mat* J)> ineq;
  // Optional exact objective Hessian (n x n). Improves the inner Newton
  // model; the solver works without it.
  std::function<void(const Vec& x, Mat* H)> objective_hessian;

  Vec lb, ub;  // size n; entries of +-1e20 or larger magnitude mean unbounded

  // When true, the objective's "gradient" is a prescribed first-order field
  // rather than the derivative of the objective value (the reduced-game and
  // stacked-Nash problems report per-player partial gradients). The solver
  // then scores inner steps by the first-order residual instead of by the
  // merit value, which would be meaningless for a non-conservative field.
  bool gradient_is_partial = false;

  std::string name;
};

enum class SolveStatus { Succeeded, InfeasibleDetected, MaxIterExceeded, NumericalFailure };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double tol = 1e-6;          // KKT tolerance on every residual component
  int max_outer = 60;         // augmented-Lagrangian outer iterations
  int max_inner = 150;        // Newton iterations per outer solve
  double rho0 = 10.0;         // initial penalty
  double rho_growth = 10.0;   // penalty growth factor (> 1)
  double rho_cap = 1e8;       // penalty cap triggering infeasibility logic
  double multiplier_cap = 1e8;
  double time_limit_s = 1e9;
  // Infeasibility is declared when rho exceeds rho_cap while the primal
  // residual stays above this threshold and shrinks by less than 10% per
  // outer iteration.
  double infeas_primal = 1e-4;
  // Optional warm start of the augmented-Lagrangian state. lambda0/mu0 are
  // used when their sizes match the problem's p/q; rho_init > 0 seeds the
  // penalty (clamped to [rho0, 0.1*rho_cap]). Callers that repeatedly solve
  // nearby instances of one problem pass the previous solve's multipliers
  // here; defaults reproduce a cold start.
  Vec lambda0, mu0;
  double rho_init = -1.0;
  // Debug trace: one CSV row per outer iteration.
  bool trace = false;
  std::string trace_path;
};

struct KKTResidual {
  double stationarity = 0.0;    // inf-norm of x - proj_box(x - grad_x L)
  double primal_eq = 0.0;       // inf-norm of c
  double primal_ineq = 0.0;     // inf-norm of max(0, g)
  double complementarity = 0.0; // inf-norm of mu .* g
  double dual_feas = 0.0;       // inf-norm of max(0, -mu)

  double max_component() const;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::NumericalFailure;
  Vec x;
  Vec lambda;  // equality multipliers
  Vec mu;      // inequality multipliers (>= 0)
  int iterations = 0;        // total inner Newton iterations
  int outer_iterations = 0;  // augmented-Lagrangian updates
  double wall_time_s = 0.0;
  KKTResidual kkt;
  double objective = 0.0;
  double rho_final = 0.0;
};

// Augmented-Lagrangian solver: equality and inequality constraints enter the
// Rockafellar augmented Lagrangian with safeguarded multiplier updates, the
// inner minimization over the box runs a projected damped Newton method, and
// the penalty is nondecreasing across outer iterations. Deterministic given
// (problem, x0, options).
SolveOutcome solve_nlp(const NLPProblem& problem, const Vec& x0, const SolverOptions& opts);

// Exact first-order residuals of the KKT system at (x, lambda, mu), using the
// problem's own gradient/Jacobian evaluators. Stationarity uses the projected
// form, which reduces to ||grad L||_inf when no box is active.
KKTResidual kkt_residual(const NLPProblem& problem, const Vec& x, const Vec& lambda,
                         const Vec& mu);

// Central-difference Jacobian oracle: column j is (f(x+h e_j) - f(x-h e_j)) / (2h).
Mat finite_diff_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h);

// Central-difference gradient of a scalar function.
Vec finite_diff_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h);

}  // namespace brnash

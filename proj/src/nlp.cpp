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

#include "brnash/nlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

namespace brnash {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kBoundEps = 1e-12;

bool all_finite(const Vec& v) { return v.allFinite(); }

Vec project_box(const Vec& x, const Vec& lb, const Vec& ub) {
  return x.cwiseMax(lb).cwiseMin(ub);
}

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Joint evaluation of everything the inner iteration needs at one point.
struct Eval {
  double f = 0.0;
  Vec gf;
  Vec c, g;
  Mat Jc, Jg;
  bool ok = false;
};

class AlSolver {
 public:
  AlSolver(const NLPProblem& P, const SolverOptions& opts) : P_(P), o_(opts) {
    lb_ = P.lb.size() == P.n ? P.lb : Vec::Constant(P.n, -1e20);
    ub_ = P.ub.size() == P.n ? P.ub : Vec::Constant(P.n, 1e20);
  }

  SolveOutcome run(const Vec& x0) {
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    SolveOutcome out;
    Vec x = project_box(x0, lb_, ub_);
    Vec lambda = o_.lambda0.size() == P_.p
                     ? Vec(o_.lambda0.cwiseMax(-o_.multiplier_cap).cwiseMin(o_.multiplier_cap))
                     : Vec::Zero(P_.p);
    Vec mu = o_.mu0.size() == P_.q
                 ? Vec(o_.mu0.cwiseMax(0.0).cwiseMin(o_.multiplier_cap))
                 : Vec::Zero(P_.q);
    double rho = o_.rho0;
    if (o_.rho_init > 0.0)
      rho = std::min(std::max(o_.rho_init, o_.rho0), 0.1 * o_.rho_cap);

    double prev_primal = std::numeric_limits<double>::infinity();
    double prev_conv = std::numeric_limits<double>::infinity();
    int stagnant_rounds = 0;
    const double omega = std::max(0.3 * o_.tol, 1e-12);

    std::ofstream trace;

    bool numerical_failure = false;
    int total_inner = 0;

    for (int outer = 0; outer < o_.max_outer; ++outer) {
      out.outer_iterations = outer + 1;
      if (!inner_minimize(x, lambda, mu, rho, omega, total_inner, t_start)) {
        numerical_failure = true;
        break;
      }

      Eval E;
      if (!evaluate(x, E, /*with_jac=*/true)) {
        numerical_failure = true;
        break;
      }

      Vec lambda_hat = (lambda + rho * E.c)
                           .cwiseMax(-o_.multiplier_cap)
                           .cwiseMin(o_.multiplier_cap);
      Vec mu_hat = P_.q > 0 ? Vec((mu + rho * E.g).cwiseMax(0.0).cwiseMin(o_.multiplier_cap))
                            : Vec(0);

      KKTResidual kkt = residual_from(x, E, lambda_hat, mu_hat);
      const double primal = std::max(kkt.primal_eq, kkt.primal_ineq);
      const double conv = std::max(primal, kkt.complementarity);

      if (o_.trace) trace_row(trace, outer, E.f, kkt, rho);

      if (kkt.max_component() <= o_.tol) {
        out.status = SolveStatus::Succeeded;
        out.x = x;
        out.lambda = lambda_hat;
        out.mu = mu_hat;
        out.kkt = kkt;
        out.objective = E.f;
        out.iterations = total_inner;
        out.rho_final = rho;
        out.wall_time_s = elapsed();
        return out;
      }

      lambda = lambda_hat;
      mu = mu_hat;

      // Track primal stagnation: rounds in which a large primal residual
      // shrank by less than 10% even though the penalty kept growing.
      if (primal > o_.infeas_primal && primal > 0.9 * prev_primal && rho >= 1e4)
        ++stagnant_rounds;
      else
        stagnant_rounds = 0;

      // Infeasibility rule: the penalty is exhausted — or has grown by three
      // decades without denting the primal residual — while that residual is
      // large and shrinking by less than 10% per outer iteration.
      if ((rho > o_.rho_cap || stagnant_rounds >= 3) && primal > o_.infeas_primal &&
          primal > 0.9 * prev_primal) {
        out.status = SolveStatus::InfeasibleDetected;
        out.x = x;
        out.lambda = lambda;
        out.mu = mu;
        out.kkt = kkt;
        out.objective = E.f;
        out.iterations = total_inner;
        out.rho_final = rho;
        out.wall_time_s = elapsed();
        return out;
      }

      // Penalty is nondecreasing; grow it when the feasibility/complementarity
      // measure is not contracting fast enough.
      if (conv > 0.25 * prev_conv && conv > o_.tol) rho = std::min(rho * o_.rho_growth, 1e12);

      prev_primal = primal;
      prev_conv = conv;

      if (elapsed() > o_.time_limit_s) break;
    }

    // Fell out of the outer loop: classify and report the last iterate.
    Eval E;
    const bool eval_ok = evaluate(x, E, /*with_jac=*/true);
    out.status = (numerical_failure || !eval_ok) ? SolveStatus::NumericalFailure
                                                 : SolveStatus::MaxIterExceeded;
    out.x = x;
    out.lambda = lambda;
    out.mu = mu;
    if (eval_ok) {
      Vec lh = (lambda + rho * E.c).cwiseMax(-o_.multiplier_cap).cwiseMin(o_.multiplier_cap);
      Vec mh =
          P_.q > 0 ? Vec((mu + rho * E.g).cwiseMax(0.0).cwiseMin(o_.multiplier_cap)) : Vec(0);
      out.kkt = residual_from(x, E, lh, mh);
      out.lambda = lh;
      out.mu = mh;
      out.objective = E.f;
    }
    out.iterations = total_inner;
    out.rho_final = rho;
    out.wall_time_s = elapsed();
    return out;
  }

  KKTResidual residual_at(const Vec& x, const Vec& lambda, const Vec& mu) {
    Eval E;
    if (!evaluate(x, E, true)) {
      KKTResidual r;
      r.stationarity = std::numeric_limits<double>::quiet_NaN();
      return r;
    }
    return residual_from(x, E, lambda, mu);
  }

 private:
  bool evaluate(const Vec& x, Eval& E, bool with_jac) {
    E.gf.setZero(P_.n);
    E.f = P_.objective(x, &E.gf);
    if (!std::isfinite(E.f) || !all_finite(E.gf)) return false;
    if (P_.p > 0) {
      E.c.setZero(P_.p);
      if (with_jac) E.Jc.setZero(P_.p, P_.n);
      P_.eq(x, &E.c, with_jac ? &E.Jc : nullptr);
      if (!all_finite(E.c) || (with_jac && !E.Jc.allFinite())) return false;
    } else {
      E.c.resize(0);
      E.Jc.resize(0, P_.n);
    }
    if (P_.q > 0) {
      E.g.setZero(P_.q);
      if (with_jac) E.Jg.setZero(P_.q, P_.n);
      P_.ineq(x, &E.g, with_jac ? &E.Jg : nullptr);
      if (!all_finite(E.g) || (with_jac && !E.Jg.allFinite())) return false;
    } else {
      E.g.resize(0);
      E.Jg.resize(0, P_.n);
    }
    E.ok = true;
    return true;
  }

  // Augmented-Lagrangian value (no Jacobians needed).
  bool al_value(const Vec& x, const Vec& lambda, const Vec& mu, double rho, double* phi) {
    Eval E;
    if (!evaluate(x, E, /*with_jac=*/false)) return false;
    double v = E.f;
    if (P_.p > 0) v += lambda.dot(E.c) + 0.5 * rho * E.c.squaredNorm();
    for (int j = 0; j < P_.q; ++j) {
      const double m = std::max(0.0, mu[j] + rho * E.g[j]);
      v += (m * m - mu[j] * mu[j]) / (2.0 * rho);
    }
    if (!std::isfinite(v)) return false;
    *phi = v;
    return true;
  }

  Vec al_gradient(const Eval& E, const Vec& lambda, const Vec& mu, double rho) const {
    Vec g = E.gf;
    if (P_.p > 0) g += E.Jc.transpose() * (lambda + rho * E.c);
    if (P_.q > 0) g += E.Jg.transpose() * (mu + rho * E.g).cwiseMax(0.0);
    return g;
  }

  double pg_residual(const Vec& x, const Vec& grad) const {
    return inf_norm(x - project_box(x - grad, lb_, ub_));
  }

  // Gauss-Newton model of the augmented-Lagrangian Hessian.
  Mat model_hessian(const Vec& x, const Eval& E, const Vec& mu, double rho) {
    Mat H = Mat::Zero(P_.n, P_.n);
    if (P_.objective_hessian) {
      Mat Hf;
      P_.objective_hessian(x, &Hf);
      H = Hf;
    }
    if (P_.p > 0) H.noalias() += rho * E.Jc.transpose() * E.Jc;
    for (int j = 0; j < P_.q; ++j) {
      if (mu[j] + rho * E.g[j] > 0.0)
        H.noalias() += rho * E.Jg.row(j).transpose() * E.Jg.row(j);
    }
    return H;
  }

  // Projected damped-Newton minimization of the augmented Lagrangian at fixed
  // multipliers/penalty. Returns false only on non-finite evaluations.
  bool inner_minimize(Vec& x, const Vec& lambda, const Vec& mu, double rho, double omega,
                      int& total_inner,
                      const std::chrono::steady_clock::time_point& t_start) {
    double nu = 1e-8;
    int consecutive_fail = 0;

    for (int it = 0; it < o_.max_inner; ++it) {
      Eval E;
      if (!evaluate(x, E, /*with_jac=*/true)) return false;
      const Vec grad = al_gradient(E, lambda, mu, rho);
      const double res0 = pg_residual(x, grad);
      if (res0 <= omega) return true;

      Mat H = model_hessian(x, E, mu, rho);

      bool stepped = false;
      for (int attempt = 0; attempt < 25 && !stepped; ++attempt) {
        Mat Hd = H;
        Hd.diagonal().array() += nu;

        // Hold variables pinned at a bound with an outward-pointing gradient.
        std::vector<int> free_idx;
        free_idx.reserve(P_.n);
        for (int i = 0; i < P_.n; ++i) {
          const bool at_lo = x[i] - lb_[i] <= kBoundEps * (1.0 + std::abs(lb_[i]));
          const bool at_hi = ub_[i] - x[i] <= kBoundEps * (1.0 + std::abs(ub_[i]));
          if ((at_lo && grad[i] > 0.0) || (at_hi && grad[i] < 0.0))
            continue;
          free_idx.push_back(i);
        }

        Vec d = Vec::Zero(P_.n);
        if (!free_idx.empty()) {
          const int nf = static_cast<int>(free_idx.size());
          Mat Hff(nf, nf);
          Vec gf(nf);
          for (int a = 0; a < nf; ++a) {
            gf[a] = grad[free_idx[a]];
            for (int b = 0; b < nf; ++b) Hff(a, b) = Hd(free_idx[a], free_idx[b]);
          }
          Eigen::LDLT<Mat> ldlt(Hff);
          Vec df = ldlt.solve(-gf);
          if (ldlt.info() != Eigen::Success || !all_finite(df)) {
            nu = std::max(nu * 10.0, 1e-6);
            continue;
          }
          for (int a = 0; a < nf; ++a) d[free_idx[a]] = df[a];
        }
        if (inf_norm(d) == 0.0) {
          // All variables pinned or a zero direction: nothing to do here.
          return true;
        }

        if (P_.gradient_is_partial) {
          stepped = line_search_residual(x, d, E, lambda, mu, rho, res0);
        } else {
          stepped = line_search_value(x, d, grad, lambda, mu, rho);
        }
        if (!stepped) nu = std::max(nu * 10.0, 1e-6);
      }

      ++total_inner;
      if (!stepped) {
        if (++consecutive_fail >= 2) return true;  // stalled; let the outer loop react
      } else {
        consecutive_fail = 0;
        nu = std::max(nu * 0.25, 1e-10);
      }

      const double el =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      if (el > o_.time_limit_s) return true;
    }
    return true;
  }

  // Armijo backtracking on the augmented-Lagrangian value. Near a tight
  // optimum at large penalty, the predicted decrease drops below what double
  // precision can resolve in the merit value (|phi| * machine epsilon); in
  // that regime the Armijo comparison is rounding noise, so the step is
  // scored by the projected-gradient residual instead, which stays well
  // conditioned and lets the terminal polish proceed rather than stall.
  bool line_search_value(Vec& x, const Vec& d, const Vec& grad, const Vec& lambda,
                         const Vec& mu, double rho) {
    double phi0;
    if (!al_value(x, lambda, mu, rho, &phi0)) return false;
    const double noise = 1e-13 * (1.0 + std::abs(phi0));
    double res0 = -1.0;  // computed on first use
    double alpha = 1.0;
    for (int ls = 0; ls < 30; ++ls) {
      const Vec xt = project_box(x + alpha * d, lb_, ub_);
      const Vec step = xt - x;
      if (inf_norm(step) < 1e-16 * (1.0 + inf_norm(x))) return false;
      const double slope = grad.dot(step);
      const double pred = kArmijo * slope;
      if (std::abs(pred) >= noise) {
        double phit;
        if (!al_value(xt, lambda, mu, rho, &phit)) {
          alpha *= 0.5;
          continue;
        }
        // Minimizer of the 1-D quadratic through (0, phi0) with initial slope
        // `slope` and value phit, as a fraction of the current step. When the
        // model Hessian has a near-flat mode (e.g. no objective curvature
        // behind a rank-deficient Gauss-Newton term), the Newton direction is
        // grossly inflated along it; a bare Armijo test with a small constant
        // then accepts up to twice the 1-D minimizer, which makes consecutive
        // iterates straddle the flat mode instead of settling it, and plain
        // halving needs dozens of trials to bring the inflated step down to a
        // useful scale at all.
        const double denom = phit - phi0 - slope;
        const double frac = denom > 0.0 ? -0.5 * slope / denom : 1.0;
        if (phit <= phi0 + pred) {
          if (slope < 0.0 && frac > 0.05 && frac < 0.95) {
            const Vec xq = project_box(x + (frac * alpha) * d, lb_, ub_);
            double phiq;
            if (al_value(xq, lambda, mu, rho, &phiq) && phiq < phit) {
              x = xq;
              return true;
            }
          }
          x = xt;
          return true;
        }
        alpha *= std::clamp(frac, 0.05, 0.5);
      } else {
        if (res0 < 0.0) res0 = pg_residual(x, grad);
        Eval Et;
        if (!evaluate(xt, Et, /*with_jac=*/true)) {
          alpha *= 0.5;
          continue;
        }
        const double rest = pg_residual(xt, al_gradient(Et, lambda, mu, rho));
        if (rest <= (1.0 - kArmijo * alpha) * res0) {
          x = xt;
          return true;
        }
        alpha *= 0.5;
      }
    }
    return false;
  }

  // Backtracking on the projected first-order residual; used when the
  // objective gradient is a prescribed non-conservative field and the merit
  // value carries no information. Trial points are scored with fresh values
  // and gradients but the Jacobians frozen at the current iterate: a constraint
  // Jacobian can be very expensive (the reduced game differentiates through an
  // embedded best-response solve), and the surrogate only gates step
  // acceptance — the convergence test always re-evaluates the accepted point
  // in full at the top of the next iteration.
  bool line_search_residual(Vec& x, const Vec& d, const Eval& E0, const Vec& lambda,
                            const Vec& mu, double rho, double res0) {
    double alpha = 1.0;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      const Vec xt = project_box(x + alpha * d, lb_, ub_);
      if (inf_norm(xt - x) < 1e-16 * (1.0 + inf_norm(x))) return false;
      // Cheap pre-screen with the base-point Jacobians, then certify the
      // survivor against its own Jacobians: accepting on the frozen model
      // alone lets the true residual grow and the iteration cycle.
      Eval Et;
      if (!evaluate(xt, Et, /*with_jac=*/false)) continue;
      Vec grad_t = Et.gf;
      if (P_.p > 0) grad_t += E0.Jc.transpose() * (lambda + rho * Et.c);
      if (P_.q > 0) grad_t += E0.Jg.transpose() * (mu + rho * Et.g).cwiseMax(0.0);
      const double target = (1.0 - kArmijo * alpha) * res0;
      if (pg_residual(xt, grad_t) > target) continue;
      // Certify only the candidate the frozen model likes, and give up on
      // the whole direction when the fresh-Jacobian residual disagrees: the
      // model is untrustworthy here, and probing further trial points would
      // charge a constraint-Jacobian evaluation for each.
      Eval Ej;
      if (!evaluate(xt, Ej, /*with_jac=*/true)) continue;
      if (pg_residual(xt, al_gradient(Ej, lambda, mu, rho)) > target) return false;
      x = xt;
      return true;
    }
    return false;
  }

  KKTResidual residual_from(const Vec& x, const Eval& E, const Vec& lambda, const Vec& mu) const {
    KKTResidual r;
    Vec gl = E.gf;
    if (P_.p > 0) gl += E.Jc.transpose() * lambda;
    if (P_.q > 0) gl += E.Jg.transpose() * mu;
    r.stationarity = pg_residual(x, gl);
    r.primal_eq = inf_norm(E.c);
    r.primal_ineq = P_.q > 0 ? std::max(0.0, E.g.maxCoeff()) : 0.0;
    r.complementarity = P_.q > 0 ? inf_norm(mu.cwiseProduct(E.g)) : 0.0;
    r.dual_feas = P_.q > 0 ? std::max(0.0, (-mu).maxCoeff()) : 0.0;
    return r;
  }

  void trace_row(std::ofstream& trace, int outer, double f, const KKTResidual& kkt, double rho) {
    if (!trace.is_open()) {
      trace.open(o_.trace_path.empty() ? "nlp_trace.csv" : o_.trace_path);
      trace << "outer,objective,stationarity,primal_eq,primal_ineq,complementarity,rho\n";
    }
    trace << outer << ',' << f << ',' << kkt.stationarity << ',' << kkt.primal_eq << ','
          << kkt.primal_ineq << ',' << kkt.complementarity << ',' << rho << '\n';
  }

  const NLPProblem& P_;
  SolverOptions o_;
  Vec lb_, ub_;
};

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Succeeded: return "Succeeded";
    case SolveStatus::InfeasibleDetected: return "InfeasibleDetected";
    case SolveStatus::MaxIterExceeded: return "MaxIterExceeded";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

double KKTResidual::max_component() const {
  return std::max({stationarity, primal_eq, primal_ineq, complementarity, dual_feas});
}

SolveOutcome solve_nlp(const NLPProblem& problem, const Vec& x0, const SolverOptions& opts) {
  AlSolver solver(problem, opts);
  return solver.run(x0);
}

KKTResidual kkt_residual(const NLPProblem& problem, const Vec& x, const Vec& lambda,
                         const Vec& mu) {
  SolverOptions opts;
  AlSolver solver(problem, opts);
  return solver.residual_at(x, lambda, mu);
}

Mat finite_diff_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h) {
  const Vec f0 = f(x);
  Mat J(f0.size(), x.size());
  Vec xp = x;
  for (int j = 0; j < x.size(); ++j) {
    const double xj = x[j];
    xp[j] = xj + h;
    const Vec fp = f(xp);
    xp[j] = xj - h;
    const Vec fm = f(xp);
    xp[j] = xj;
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

Vec finite_diff_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec xp = x;
  for (int j = 0; j < x.size(); ++j) {
    const double xj = x[j];
    xp[j] = xj + h;
    const double fp = f(xp);
    xp[j] = xj - h;
    const double fm = f(xp);
    xp[j] = xj;
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace brnash

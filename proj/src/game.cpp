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

#include "brnash/game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "brnash/rng.hpp"

namespace brnash {

namespace {

void check_dims(const GameSpec& game, int p, const Trajectory& Z_self,
                const Trajectory& Z_other, const char* where) {
  const int q = 1 - p;
  auto bad = [&](bool cond) {
    if (cond) throw std::invalid_argument(std::string(where) + ": trajectory dimensions do not match game");
  };
  bad(static_cast<int>(Z_self.X.size()) != game.N + 1);
  bad(static_cast<int>(Z_self.U.size()) != game.N);
  bad(static_cast<int>(Z_other.X.size()) != game.N + 1);
  bad(static_cast<int>(Z_other.U.size()) != game.N);
  for (const Vec& x : Z_self.X) bad(static_cast<int>(x.size()) != game.nx[p]);
  for (const Vec& u : Z_self.U) bad(static_cast<int>(u.size()) != game.nu[p]);
  for (const Vec& x : Z_other.X) bad(static_cast<int>(x.size()) != game.nx[q]);
  for (const Vec& u : Z_other.U) bad(static_cast<int>(u.size()) != game.nu[q]);
}

}  // namespace

double evaluate_cost(const GameSpec& game, int p, const Trajectory& Z_self,
                     const Trajectory& Z_other) {
  check_dims(game, p, Z_self, Z_other, "evaluate_cost");
  double J = 0.0;
  Vec u_prev = Vec::Zero(game.nu[p]);
  for (int k = 0; k < game.N; ++k) {
    J += game.stage_cost(p, k, Z_self.X[k], Z_self.U[k], u_prev, nullptr, nullptr, nullptr);
    u_prev = Z_self.U[k];
  }
  J += game.terminal_cost(p, Z_self.X[game.N], Z_other.X[game.N], nullptr, nullptr);
  return J;
}

std::pair<Vec, Vec> evaluate_constraints(const GameSpec& game, int p, const Trajectory& Z_self,
                                         const Trajectory& Z_other) {
  check_dims(game, p, Z_self, Z_other, "evaluate_constraints");
  const int nx = game.nx[p];
  const int n_eq = game.N * (nx + game.n_eq_rows);
  const int n_in = (game.N + 1) * game.n_ineq_rows;

  Vec eq(n_eq), in(n_in);
  int at = 0;
  for (int k = 0; k < game.N; ++k) {
    eq.segment(at, nx) =
        Z_self.X[k + 1] - game.dynamics(p, Z_self.X[k], Z_self.U[k], nullptr, nullptr);
    at += nx;
    if (game.n_eq_rows > 0) {
      eq.segment(at, game.n_eq_rows) =
          game.stage_eq(p, k, Z_self.X[k], Z_self.U[k], nullptr, nullptr);
      at += game.n_eq_rows;
    }
  }
  at = 0;
  for (int k = 0; k <= game.N && game.n_ineq_rows > 0; ++k) {
    in.segment(at, game.n_ineq_rows) =
        game.stage_ineq(p, k, Z_self.X[k], Z_other.X[k], nullptr, nullptr);
    at += game.n_ineq_rows;
  }
  return {eq, in};
}

std::vector<Vec> rollout(const GameSpec& game, int p, const Vec& x0, const std::vector<Vec>& U) {
  if (static_cast<int>(x0.size()) != game.nx[p])
    throw std::invalid_argument("rollout: x0 dimension mismatch");
  std::vector<Vec> X(U.size() + 1);
  X[0] = x0;
  for (std::size_t k = 0; k < U.size(); ++k) {
    if (static_cast<int>(U[k].size()) != game.nu[p])
      throw std::invalid_argument("rollout: input dimension mismatch");
    X[k + 1] = game.dynamics(p, X[k], U[k], nullptr, nullptr);
  }
  return X;
}

namespace {

// Feasibility slack used by the probe filter: a probe counts as feasible if
// no bound or inequality is violated by more than this. Keeps the check
// meaningful when the candidate itself sits on a constraint boundary within
// solver tolerance.
constexpr double kProbeFeasTol = 1e-8;

bool probe_feasible(const GameSpec& game, int p, const Trajectory& Z_self,
                    const Trajectory& Z_other) {
  for (int k = 0; k < game.N; ++k) {
    const Vec& u = Z_self.U[k];
    for (int j = 0; j < game.nu[p]; ++j)
      if (u[j] < game.u_lo[p][j] - kProbeFeasTol || u[j] > game.u_hi[p][j] + kProbeFeasTol)
        return false;
  }
  for (int k = 1; k <= game.N; ++k) {
    const Vec& x = Z_self.X[k];
    for (int j = 0; j < game.nx[p]; ++j)
      if (x[j] < game.x_lo[p][j] - kProbeFeasTol || x[j] > game.x_hi[p][j] + kProbeFeasTol)
        return false;
  }
  if (game.n_ineq_rows > 0) {
    for (int k = 0; k <= game.N; ++k) {
      Vec g = game.stage_ineq(p, k, Z_self.X[k], Z_other.X[k], nullptr, nullptr);
      if (g.maxCoeff() > kProbeFeasTol) return false;
    }
  }
  return true;
}

}  // namespace

NashCheckReport nash_check(const GameSpec& game, const Trajectory& Z1, const Trajectory& Z2,
                           double radius, int n_samples, std::uint64_t seed) {
  if (radius < 0.0) throw std::invalid_argument("nash_check: radius must be >= 0");
  NashCheckReport rep;
  const std::array<const Trajectory*, 2> Z{&Z1, &Z2};

  rep.candidate_feasible =
      probe_feasible(game, 0, Z1, Z2) && probe_feasible(game, 1, Z2, Z1);

  for (int p = 0; p < 2; ++p) {
    const Trajectory& self = *Z[p];
    const Trajectory& other = *Z[1 - p];
    const double J0 = evaluate_cost(game, p, self, other);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(p)));

    double best = 0.0;
    int feas = 0;
    for (int i = 0; i < n_samples; ++i) {
      Trajectory probe;
      probe.U.resize(game.N);
      for (int k = 0; k < game.N; ++k) {
        Vec du(game.nu[p]);
        for (int j = 0; j < game.nu[p]; ++j) du[j] = rng.uniform(-radius, radius);
        probe.U[k] = self.U[k] + du;
      }
      probe.X = rollout(game, p, self.X[0], probe.U);
      if (!probe_feasible(game, p, probe, other)) continue;
      ++feas;
      const double J = evaluate_cost(game, p, probe, other);
      best = std::max(best, J0 - J);
    }
    rep.max_improvement[p] = best;
    rep.n_feasible[p] = feas;
    rep.n_probes[p] = n_samples;
  }
  return rep;
}

}  // namespace brnash

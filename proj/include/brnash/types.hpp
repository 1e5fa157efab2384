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

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace brnash {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// A player's open-loop plan: states x_0..x_N and inputs u_0..u_{N-1}.
struct Trajectory {
  std::vector<Vec> X;  // N+1 states
  std::vector<Vec> U;  // N inputs

  int horizon() const { return static_cast<int>(U.size()); }
};

// Stacked Lagrange multipliers for one player's constraint system:
// lambda_eq matches [dynamics defects; h] and mu_ineq matches g (g <= 0).
struct Multipliers {
  Vec lambda_eq;
  Vec mu_ineq;
};

// Flattening convention used everywhere a trajectory becomes a plain vector
// (serialization, the Z2 block of the reduced problem, best-response
// residuals): [x_0, ..., x_N, u_0, ..., u_{N-1}].
inline Vec flatten(const Trajectory& z) {
  int nx = z.X.empty() ? 0 : static_cast<int>(z.X[0].size());
  int nu = z.U.empty() ? 0 : static_cast<int>(z.U[0].size());
  Vec out(nx * static_cast<int>(z.X.size()) + nu * static_cast<int>(z.U.size()));
  int at = 0;
  for (const Vec& x : z.X) {
    out.segment(at, x.size()) = x;
    at += static_cast<int>(x.size());
  }
  for (const Vec& u : z.U) {
    out.segment(at, u.size()) = u;
    at += static_cast<int>(u.size());
  }
  return out;
}

inline Trajectory unflatten(const Vec& v, int nx, int nu, int N) {
  if (v.size() != nx * (N + 1) + nu * N)
    throw std::invalid_argument("unflatten: vector length does not match (nx,nu,N)");
  Trajectory z;
  z.X.resize(N + 1);
  z.U.resize(N);
  int at = 0;
  for (int k = 0; k <= N; ++k, at += nx) z.X[k] = v.segment(at, nx);
  for (int k = 0; k < N; ++k, at += nu) z.U[k] = v.segment(at, nu);
  return z;
}

inline Vec flatten_states(const std::vector<Vec>& X) {
  if (X.empty()) return Vec(0);
  int nx = static_cast<int>(X[0].size());
  Vec out(nx * static_cast<int>(X.size()));
  for (std::size_t k = 0; k < X.size(); ++k) out.segment(static_cast<int>(k) * nx, nx) = X[k];
  return out;
}

}  // namespace brnash

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

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "brnash/harness.hpp"
#include "brnash/surrogate.hpp"

namespace brnash {

// Malformed config file, unknown section/key, or invalid value. The CLI maps
// this to the usage/config exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat run configuration: sectioned key = value text file, strict parsing
// (unknown keys rejected), defaults reproducing the benchmark setup so a
// bare file runs the full campaign.
struct RunConfig {
  // [game]
  std::string game_kind = "racing";  // racing | toy
  double track_radius = 3.5;
  double wheel_lf = 0.13, wheel_lr = 0.13;
  int horizon = 10;
  double dt = 0.05;
  double v_min = 0.0, v_max = 2.0;
  double half_width = 0.5;
  double a_max = 2.0;
  double delta_max_deg = 25.0;
  double d_safe = 0.25;
  double r_u = 0.1, p_du = 0.5, q_v = 0.05;
  double q11 = 20.0, q12 = 10.0, q21 = 10.0, q22 = 20.0;

  // [solver]
  double tol = 1e-6;
  int max_outer = 60, max_inner = 150;
  double rho0 = 10.0, rho_growth = 10.0, rho_cap = 1e8;
  double eq_tol = 1e-6;
  int eq_max_iterations = 60;
  double br_solve_tol = 1e-9;
  double br_fd_step = 1e-5;
  double br_jacobian_refresh = 5e-3;

  // [dataset]
  int n_samples = 27067;
  std::uint64_t dataset_seed = 1;

  // [training]
  TrainingConfig training;

  // [montecarlo]
  int n_trials = 100;
  std::vector<Method> methods{Method::Reduced, Method::Ibr, Method::Joint};
  std::uint64_t master_seed = 1;
  int workers = 0;  // 0 = hardware concurrency
  double eps = 1e-6;
  double prox_max = 0.7;
  bool record_trajectories = false;
  Method baseline = Method::Ibr;

  // [output]
  std::string out_dir = "out";

  RacingParams to_racing_params() const;
  SolverOptions to_solver_options() const;
  EquilibriumOptions to_equilibrium_options() const;
  MonteCarloConfig to_monte_carlo_config() const;
};

// Strict parse; throws ConfigError on unknown sections/keys or bad values.
RunConfig load_config(const std::string& path);

// Canonical serialization of the effective (default-filled) config; parsing
// it back yields an equivalent RunConfig.
std::string serialize_config(const RunConfig& cfg);
void save_config(const std::string& path, const RunConfig& cfg);

// FNV-1a 64-bit of a byte string.
std::uint64_t fnv1a(const std::string& bytes);

// Chained stage digests for resume-from-artifacts: a stage's hash covers its
// own settings plus the hash of the stage it consumes, so an upstream change
// invalidates everything downstream. Stages: dataset, train, validate,
// montecarlo, report.
std::uint64_t stage_hash(const RunConfig& cfg, const std::string& stage);

}  // namespace brnash

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
#include <string>
#include <vector>

#include "brnash/equilibrium.hpp"
#include "brnash/frenet.hpp"
#include "brnash/game.hpp"

namespace brnash {

// Learned best-response map: a fully connected network with tanh hidden
// layers and a linear output that is squashed per channel into the open
// input box, followed by a dynamics rollout that binds the predicted inputs
// to an exactly dynamics-consistent trajectory.
//
// Feature vector: phi = [x_{2,0} (n2); x_{1,0}; ...; x_{1,N} (n1 each)],
// standardized componentwise as (phi - feat_mu) / feat_sigma before the
// first layer (the standardization is part of the parameters and of every
// Jacobian).
struct SurrogateParams {
  int N = 10;
  int n1 = 4;  // opponent state dimension
  int n2 = 4;  // responder state dimension
  int m2 = 2;  // responder input dimension

  std::vector<Mat> W;  // weight matrices, layer l maps width_l -> width_{l+1}
  std::vector<Vec> b;

  Vec feat_mu, feat_sigma;  // input standardization (size input_dim)
  Vec out_mid, out_half;    // squash u = mid + half * tanh(raw), size output_dim

  int input_dim() const { return n2 + n1 * (N + 1); }
  int output_dim() const { return m2 * N; }
  int layers() const { return static_cast<int>(W.size()); }
};

// Parameter gradients, same shapes as W/b.
struct ParamGrads {
  std::vector<Mat> dW;
  std::vector<Vec> db;

  void setZero(const SurrogateParams& p);
  void add(const ParamGrads& o, double scale = 1.0);
  double squared_norm() const;
};

// One supervised example: the opponent's state sequence and the responder's
// exact best response against it.
struct BRSample {
  Vec x1_0, x2_0;       // initial states
  std::vector<Vec> X1;  // opponent states, N+1 entries
  Trajectory Z2;        // label: exact best-response trajectory
};

struct TrainingConfig {
  double lr = 3e-4;
  double weight_decay = 1e-4;
  int batch_size = 256;
  int epochs = 500;
  double grad_clip = 5.0;   // global norm
  double gamma = 0.92;      // time weight decay, w_k = gamma^k
  double lambda_u = 30.0;
  double lambda_x = 150.0;
  double lambda_g = 50.0;
  double val_frac = 0.2;
  std::uint64_t seed = 1;
  std::vector<int> hidden_widths{128, 128, 64};
  // Geometry for the collision penalty term.
  TrackParams track = TrackParams::benchmark();
  double d_safe = 0.25;
  bool verbose = false;
};

// phi = [x2_0; X1[0]; ...; X1[N]]. Throws on length mismatch.
Vec featurize(const Vec& x2_0, const std::vector<Vec>& X1, int N);

// Raw network output (pre-squash). Applies the baked-in standardization.
Vec mlp_forward(const SurrogateParams& p, const Vec& phi);

// u = mid + half * tanh(raw), componentwise; strictly inside the box.
Vec squash(const SurrogateParams& p, const Vec& raw);

// Predicted inputs from the network, states from an exact dynamics rollout;
// the returned trajectory has zero dynamics defects by construction.
Trajectory surrogate_rollout(const SurrogateParams& p, const GameSpec& game, const Vec& x2_0,
                             const std::vector<Vec>& X1);

// Exact chain-rule Jacobian d flatten(surrogate_rollout) / d flatten_states(X1),
// rows in [x_0..x_N, u_0..u_{N-1}] order.
Mat surrogate_jacobian(const SurrogateParams& p, const GameSpec& game, const Vec& x2_0,
                       const std::vector<Vec>& X1);

// Rollout-aware training loss, averaged over the batch:
//   lambda_u sum_k w_k ||uhat_k - u_k||^2 + lambda_x sum_k w_k ||xhat_k - x_k||^2
//   + lambda_g sum_k relu(d_safe^2 - ||p1_k - phat2_k||^2)^2,   w_k = gamma^k
// (the collision term carries no time weight). When `grads` is non-null the
// closed-form parameter gradient is accumulated into it.
double br_loss(const SurrogateParams& p, const GameSpec& game,
               const std::vector<BRSample>& batch, const TrainingConfig& cfg,
               ParamGrads* grads);

struct TrainResult {
  SurrogateParams params;  // best-validation checkpoint
  std::vector<double> train_loss, val_loss;  // per epoch
  int best_epoch = -1;
  double best_val = 0.0;
  double wall_time_s = 0.0;
};

// The (train, validation) split used by train(): a seeded shuffle of the
// dataset with the validation tail carved off. Exposed so post-hoc metrics
// can score exactly the held-out samples.
std::pair<std::vector<BRSample>, std::vector<BRSample>> split_dataset(
    const std::vector<BRSample>& dataset, const TrainingConfig& cfg);

// Deterministic single-threaded minibatch training (decoupled weight decay,
// bias-corrected adaptive moments, global-norm clipping). Splits the dataset
// (1 - val_frac)/val_frac after a seeded shuffle, standardizes features on
// the training split, and returns the parameters of the best validation
// epoch. Throws on NaN loss.
TrainResult train(const std::vector<BRSample>& dataset, const GameSpec& game,
                  const TrainingConfig& cfg);

struct ValidationMetrics {
  double rmse_a = 0.0, rmse_delta = 0.0;          // per input channel
  double rmse_v = 0.0, rmse_psi = 0.0, rmse_s = 0.0, rmse_t = 0.0;  // per state
  double rmse_pos = 0.0;   // Cartesian position RMSE over all steps/samples
  double max_col_violation = 0.0;  // max over steps of relu(d_safe^2 - dist^2)
  int n_samples = 0;
};

// All RMSEs are root-mean-square over every validation step and sample;
// the collision figure is the max over all of them. Parallelizes over
// samples into slot-indexed storage; identical results for any worker count.
ValidationMetrics validation_metrics(const SurrogateParams& p, const GameSpec& game,
                                     const std::vector<BRSample>& valset,
                                     const TrackParams& track, double d_safe, int workers);

struct DatasetGenReport {
  int n_samples = 0;
  int n_attempts = 0;
  int n_discarded = 0;
};

// Offline labeled-data generation: initial pairs from the Monte Carlo
// sampler (proximity window), opponent plans synthesized by alternating an
// exact best response to a constant-velocity extrapolation with random
// bounded input rollouts, labels from exact best-response solves. Failed
// label solves are discarded (and counted). Parallel over samples with
// per-sample derived seeds; deterministic for any worker count.
std::vector<BRSample> generate_dataset(const struct RacingParams& rp, int n_samples,
                                       std::uint64_t seed, int workers,
                                       DatasetGenReport* report);

// JSON-lines serialization (one sample per line, full double precision).
void save_dataset(const std::string& path, const std::vector<BRSample>& data);
std::vector<BRSample> load_dataset(const std::string& path);

// Flat binary parameter container: magic + JSON header + row-major doubles.
// Round-trips bit-exactly.
void save_surrogate(const std::string& path, const SurrogateParams& p);
SurrogateParams load_surrogate(const std::string& path);

// Wrap the surrogate as a best-response operator for the reduced solver.
BestResponseOperator make_learned_br_operator(const GameSpec& game, const SurrogateParams& p);

// Seeded initialization (uniform fan-in/fan-out scaling), identity
// standardization, squash limits from the game's input box.
SurrogateParams init_surrogate(const GameSpec& game, int responder,
                               const std::vector<int>& hidden_widths, std::uint64_t seed);

}  // namespace brnash

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
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "brnash/rng.hpp"
#include "brnash/surrogate.hpp"

namespace brnash {

namespace {

std::vector<int> seeded_permutation(int n, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

}  // namespace

std::pair<std::vector<BRSample>, std::vector<BRSample>> split_dataset(
    const std::vector<BRSample>& dataset, const TrainingConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("split_dataset: empty dataset");
  // Seeded split: permute, then carve off the validation tail.
  const int M = static_cast<int>(dataset.size());
  const std::vector<int> perm = seeded_permutation(M, derive_seed(cfg.seed, 0xA11C));
  const int n_val = std::min(M - 1, static_cast<int>(std::lround(cfg.val_frac * M)));
  const int n_train = M - n_val;
  std::pair<std::vector<BRSample>, std::vector<BRSample>> out;
  out.first.reserve(n_train);
  out.second.reserve(n_val);
  for (int i = 0; i < n_train; ++i) out.first.push_back(dataset[perm[i]]);
  for (int i = n_train; i < M; ++i) out.second.push_back(dataset[perm[i]]);
  return out;
}

TrainResult train(const std::vector<BRSample>& dataset, const GameSpec& game,
                  const TrainingConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  const auto t0 = std::chrono::steady_clock::now();

  auto [train_set, val_set] = split_dataset(dataset, cfg);
  const int n_train = static_cast<int>(train_set.size());

  SurrogateParams params = init_surrogate(game, 1, cfg.hidden_widths, cfg.seed);

  // Feature standardization from the training split, baked into the params.
  {
    const int d = params.input_dim();
    Vec mu = Vec::Zero(d), m2 = Vec::Zero(d);
    for (const BRSample& s : train_set) {
      const Vec phi = featurize(s.x2_0, s.X1, params.N);
      mu += phi;
      m2 += phi.cwiseProduct(phi);
    }
    mu /= n_train;
    m2 /= n_train;
    Vec var = (m2 - mu.cwiseProduct(mu)).cwiseMax(0.0);
    params.feat_mu = mu;
    params.feat_sigma = var.cwiseSqrt().cwiseMax(1e-8);
  }

  // Decoupled-weight-decay adaptive moments.
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  ParamGrads m, v;
  m.setZero(params);
  v.setZero(params);
  long long t_step = 0;

  TrainResult result;
  result.best_val = std::numeric_limits<double>::infinity();

  auto eval_val = [&](const SurrogateParams& p) {
    return val_set.empty() ? std::numeric_limits<double>::quiet_NaN()
                           : br_loss(p, game, val_set, cfg, nullptr);
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::vector<int> order =
        seeded_permutation(n_train, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));

    double epoch_loss = 0.0;
    int epoch_count = 0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int bs = std::min(cfg.batch_size, n_train - start);
      std::vector<BRSample> batch;
      batch.reserve(bs);
      for (int i = 0; i < bs; ++i) batch.push_back(train_set[order[start + i]]);

      ParamGrads g;
      const double loss = br_loss(params, game, batch, cfg, &g);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += loss * bs;
      epoch_count += bs;

      const double gn = std::sqrt(g.squared_norm());
      if (cfg.grad_clip > 0.0 && gn > cfg.grad_clip) {
        const double scale = cfg.grad_clip / gn;
        for (std::size_t l = 0; l < g.dW.size(); ++l) {
          g.dW[l] *= scale;
          g.db[l] *= scale;
        }
      }

      ++t_step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_step));
      for (int l = 0; l < params.layers(); ++l) {
        m.dW[l] = beta1 * m.dW[l] + (1.0 - beta1) * g.dW[l];
        v.dW[l].array() = beta2 * v.dW[l].array() + (1.0 - beta2) * g.dW[l].array().square();
        params.W[l].array() -=
            cfg.lr * ((m.dW[l].array() / bc1) / ((v.dW[l].array() / bc2).sqrt() + eps) +
                      cfg.weight_decay * params.W[l].array());
        m.db[l] = beta1 * m.db[l] + (1.0 - beta1) * g.db[l];
        v.db[l].array() = beta2 * v.db[l].array() + (1.0 - beta2) * g.db[l].array().square();
        params.b[l].array() -=
            cfg.lr * ((m.db[l].array() / bc1) / ((v.db[l].array() / bc2).sqrt() + eps) +
                      cfg.weight_decay * params.b[l].array());
      }
    }
    const double train_loss = epoch_loss / epoch_count;
    const double val_loss = eval_val(params);
    if (!val_set.empty() && !std::isfinite(val_loss))
      throw std::runtime_error("train: non-finite validation loss at epoch " +
                               std::to_string(epoch));
    result.train_loss.push_back(train_loss);
    result.val_loss.push_back(val_loss);

    const double select = val_set.empty() ? train_loss : val_loss;
    if (select < result.best_val) {
      result.best_val = select;
      result.best_epoch = epoch;
      result.params = params;
    }
    if (cfg.verbose && (epoch % 10 == 0 || epoch + 1 == cfg.epochs)) {
      std::printf("epoch %4d  train %.6f  val %.6f  best %.6f (epoch %d)\n", epoch, train_loss,
                  val_loss, result.best_val, result.best_epoch);
      std::fflush(stdout);
    }
  }

  if (result.best_epoch < 0) result.params = params;  // epochs == 0
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace brnash

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
#include <cstdio>
#include <filesystem>

#include "brnash/nlp.hpp"
#include "brnash/racing.hpp"
#include "brnash/rng.hpp"
#include "brnash/surrogate.hpp"

using namespace brnash;

namespace {

GameSpec small_game(int N = 3) {
  RacingParams rp;
  rp.N = N;
  Vec x1(4), x2(4);
  x1 << 1.0, 0.0, 0.3, 0.1;
  x2 << 0.9, 0.1, 0.5, -0.1;
  return make_racing_game(rp, x1, x2);
}

std::vector<Vec> random_states(int N, int n, Rng& r) {
  std::vector<Vec> X(static_cast<size_t>(N) + 1);
  for (auto& x : X) {
    x.resize(n);
    x[0] = r.uniform(0.3, 1.8);
    x[1] = r.uniform(-0.6, 0.6);
    x[2] = r.uniform(0.0, 4.0);
    x[3] = r.uniform(-0.4, 0.4);
  }
  return X;
}

}  // namespace

TEST_CASE("featurize packs the responder state first, then the opponent path") {
  const int N = 3;
  Rng r(11);
  Vec x2 = Vec::LinSpaced(4, 1.0, 4.0);
  auto X1 = random_states(N, 4, r);
  Vec phi = featurize(x2, X1, N);
  REQUIRE(phi.size() == 4 + 4 * (N + 1));
  for (int i = 0; i < 4; ++i) CHECK(phi[i] == x2[i]);
  for (int k = 0; k <= N; ++k)
    for (int i = 0; i < 4; ++i) CHECK(phi[4 + 4 * k + i] == X1[k][i]);

  CHECK_THROWS(featurize(x2, std::vector<Vec>(N, Vec::Zero(4)), N));  // N+1 required
}

TEST_CASE("zero network emits box midpoints") {
  GameSpec game = small_game();
  SurrogateParams p = init_surrogate(game, 1, {8}, 3);
  for (auto& W : p.W) W.setZero();
  for (auto& b : p.b) b.setZero();
  Rng r(12);
  auto X1 = random_states(game.N, 4, r);
  Trajectory Z = surrogate_rollout(p, game, game.x0[1], X1);
  for (int k = 0; k < game.N; ++k)
    for (int i = 0; i < 2; ++i)
      CHECK(Z.U[k][i] ==
            doctest::Approx(0.5 * (game.u_lo[1][i] + game.u_hi[1][i])).epsilon(1e-14));
}

TEST_CASE("forward pass equals a hand matmul on a tiny network") {
  const int N = 1;
  SurrogateParams p;
  p.N = N;
  p.n1 = 2;
  p.n2 = 1;
  p.m2 = 1;
  // input_dim = 1 + 2*2 = 5, one hidden layer of width 2, output 1
  p.W.resize(2);
  p.b.resize(2);
  p.W[0] = Mat::Zero(2, 5);
  p.W[0] << 0.1, -0.2, 0.3, 0.0, 0.5,
            -0.4, 0.25, 0.0, 0.1, -0.1;
  p.b[0] = Vec::Zero(2);
  p.b[0] << 0.05, -0.15;
  p.W[1] = Mat::Zero(1, 2);
  p.W[1] << 1.5, -2.0;
  p.b[1] = Vec::Constant(1, 0.3);
  p.feat_mu = Vec::Zero(5);
  p.feat_sigma = Vec::Ones(5);
  p.feat_mu << 0.1, 0.2, -0.1, 0.0, 0.3;
  p.feat_sigma << 1.0, 2.0, 0.5, 1.0, 4.0;
  p.out_mid = Vec::Constant(1, 0.0);
  p.out_half = Vec::Constant(1, 2.0);

  Vec phi(5);
  phi << 0.7, -0.3, 0.2, 0.4, -0.6;
  Vec z = (phi - p.feat_mu).cwiseQuotient(p.feat_sigma);
  Vec h = (p.W[0] * z + p.b[0]).array().tanh().matrix();
  Vec want = p.W[1] * h + p.b[1];

  Vec got = mlp_forward(p, phi);
  REQUIRE(got.size() == 1);
  CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-10));

  // Squash: u = mid + half * tanh(raw).
  Vec u = squash(p, got);
  CHECK(u[0] == doctest::Approx(2.0 * std::tanh(got[0])).epsilon(1e-12));
}

TEST_CASE("squash hits a chosen target exactly through atanh") {
  GameSpec game = small_game();
  SurrogateParams p = init_surrogate(game, 1, {4}, 9);
  // For the acceleration channel [-2, 2]: mid 0, half 2; raw = atanh(0.5)
  // must land exactly on u = 1.
  REQUIRE(p.out_mid[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  REQUIRE(p.out_half[0] == doctest::Approx(2.0).epsilon(1e-14));
  Vec raw = Vec::Zero(p.output_dim());
  raw[0] = std::atanh(0.5);
  Vec u = squash(p, raw);
  CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("surrogate rollout inputs stay strictly inside the box") {
  GameSpec game = small_game();
  Rng r(21);
  for (std::uint64_t s = 0; s < 50; ++s) {
    SurrogateParams p = init_surrogate(game, 1, {16, 8}, s);
    // Blow up the last layer to push the squash toward saturation.
    p.W.back() *= 50.0;
    auto X1 = random_states(game.N, 4, r);
    Trajectory Z = surrogate_rollout(p, game, game.x0[1], X1);
    for (int k = 0; k < game.N; ++k) {
      for (int i = 0; i < 2; ++i) {
        CHECK(Z.U[k][i] > game.u_lo[1][i]);
        CHECK(Z.U[k][i] < game.u_hi[1][i]);
      }
    }
  }
}

TEST_CASE("surrogate rollout has exactly zero dynamics defects") {
  GameSpec game = small_game();
  Rng r(22);
  for (std::uint64_t s = 0; s < 10; ++s) {
    SurrogateParams p = init_surrogate(game, 1, {8, 8}, 100 + s);
    auto X1 = random_states(game.N, 4, r);
    Trajectory Z = surrogate_rollout(p, game, game.x0[1], X1);
    REQUIRE(static_cast<int>(Z.X.size()) == game.N + 1);
    CHECK((Z.X[0] - game.x0[1]).cwiseAbs().maxCoeff() == 0.0);
    for (int k = 0; k < game.N; ++k) {
      const Vec next = game.dynamics(1, Z.X[k], Z.U[k], nullptr, nullptr);
      CHECK((Z.X[k + 1] - next).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("surrogate jacobian matches central differences") {
  GameSpec game = small_game();
  Rng r(23);
  int checked = 0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    SurrogateParams p = init_surrogate(game, 1, {8}, 200 + s);
    auto X1 = random_states(game.N, 4, r);
    const Vec xf = flatten_states(X1);
    Mat J = surrogate_jacobian(p, game, game.x0[1], X1);

    auto f = [&](const Vec& v) {
      std::vector<Vec> Xp(static_cast<size_t>(game.N) + 1);
      for (int k = 0; k <= game.N; ++k) Xp[k] = v.segment(4 * k, 4);
      return flatten(surrogate_rollout(p, game, game.x0[1], Xp));
    };
    Mat Jfd = finite_diff_jacobian(f, xf, 1e-6);
    REQUIRE(J.rows() == Jfd.rows());
    REQUIRE(J.cols() == Jfd.cols());
    CHECK((J - Jfd).cwiseAbs().maxCoeff() <= 1e-5);

    // The responder's initial state is fixed: its rows cannot depend on X1.
    CHECK(J.topRows(4).cwiseAbs().maxCoeff() == 0.0);
    ++checked;
  }
  CHECK(checked == 4);
}

TEST_CASE("loss terms isolate to hand-computed values") {
  // One-step game, zero time-discount handled via gamma = 1 for clarity.
  GameSpec game = small_game(1);
  TrainingConfig cfg;
  cfg.gamma = 1.0;
  cfg.lambda_u = 30.0;
  cfg.lambda_x = 50.0;
  cfg.lambda_g = 0.0;

  SurrogateParams p = init_surrogate(game, 1, {4}, 5);
  for (auto& W : p.W) W.setZero();
  for (auto& b : p.b) b.setZero();
  // Zero network => uhat = box midpoint = (0, 0) for both channels.

  BRSample s;
  s.x1_0 = game.x0[0];
  s.x2_0 = game.x0[1];
  s.X1 = {game.x0[0], game.x0[0]};
  // Label: the rollout of u* = (0.5, 0.1); states from the same dynamics.
  Vec ustar(2);
  ustar << 0.5, 0.1;
  s.Z2.U = {ustar};
  s.Z2.X = {game.x0[1], game.dynamics(1, game.x0[1], ustar, nullptr, nullptr)};

  // uhat = (0,0): input term lambda_u * ||uhat - u*||^2 = 30 * 0.26.
  // State term: xhat_1 = f(x0, 0), so lambda_x * ||f(x0,0) - x1*||^2; the k=0
  // state term vanishes (xhat_0 = x0 = x*_0).
  const Vec xhat1 = game.dynamics(1, game.x0[1], Vec::Zero(2), nullptr, nullptr);
  const double want_u = 30.0 * 0.26;
  const double want_x = 50.0 * (xhat1 - s.Z2.X[1]).squaredNorm();
  const double got = br_loss(p, game, {s}, cfg, nullptr);
  CHECK(got == doctest::Approx(want_u + want_x).epsilon(1e-10));

  // Switching off lambda_x isolates the input term exactly: 7.8.
  TrainingConfig only_u = cfg;
  only_u.lambda_x = 0.0;
  CHECK(br_loss(p, game, {s}, only_u, nullptr) == doctest::Approx(7.8).epsilon(1e-12));

  // gamma != 1 scales the k-th input term by gamma^k; with one step (k = 0)
  // the input term is unchanged.
  TrainingConfig disc = only_u;
  disc.gamma = 0.5;
  CHECK(br_loss(p, game, {s}, disc, nullptr) == doctest::Approx(7.8).epsilon(1e-12));
}

TEST_CASE("collision penalty term matches its formula") {
  GameSpec game = small_game(1);
  TrainingConfig cfg;
  cfg.lambda_u = 0.0;
  cfg.lambda_x = 0.0;
  cfg.lambda_g = 50.0;

  SurrogateParams p = init_surrogate(game, 1, {4}, 6);
  for (auto& W : p.W) W.setZero();
  for (auto& b : p.b) b.setZero();

  BRSample s;
  s.x2_0 = game.x0[1];
  s.x1_0 = game.x0[1];  // opponent sits exactly on the responder's start
  s.X1 = {s.x1_0, s.x1_0};
  s.Z2.U = {Vec::Zero(2)};
  s.Z2.X = {game.x0[1], game.dynamics(1, game.x0[1], Vec::Zero(2), nullptr, nullptr)};

  // Hand-compute: per step relu(d_safe^2 - dist^2)^2 summed over k = 0..N.
  Trajectory Zhat = surrogate_rollout(p, game, s.x2_0, s.X1);
  double want = 0.0;
  for (int k = 0; k <= game.N; ++k) {
    const double c =
        collision_constraint_sq(s.X1[k], Zhat.X[k], cfg.track, cfg.d_safe);
    const double viol = std::max(0.0, c);
    want += 50.0 * viol * viol;
  }
  CHECK(want > 0.0);  // coincident at k = 0 by construction
  CHECK(br_loss(p, game, {s}, cfg, nullptr) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("loss gradient matches finite differences through every parameter") {
  GameSpec game = small_game(2);
  TrainingConfig cfg;
  cfg.lambda_u = 30.0;
  cfg.lambda_x = 150.0;
  cfg.lambda_g = 50.0;
  cfg.gamma = 0.92;

  SurrogateParams p = init_surrogate(game, 1, {8, 8}, 7);
  Rng r(31);
  std::vector<BRSample> batch;
  for (int i = 0; i < 3; ++i) {
    BRSample s;
    s.x1_0 = game.x0[0];
    s.x2_0 = game.x0[1];
    s.X1 = random_states(game.N, 4, r);
    // Force at least one sample into collision so the g-term participates.
    if (i == 0)
      for (auto& x : s.X1) { x[FS_S] = game.x0[1][FS_S]; x[FS_T] = game.x0[1][FS_T]; }
    Vec u1(2), u2(2);
    u1 << r.uniform(-1, 1), r.uniform(-0.3, 0.3);
    u2 << r.uniform(-1, 1), r.uniform(-0.3, 0.3);
    s.Z2.U = {u1, u2};
    s.Z2.X.resize(3);
    s.Z2.X[0] = game.x0[1];
    s.Z2.X[1] = game.dynamics(1, s.Z2.X[0], u1, nullptr, nullptr);
    s.Z2.X[2] = game.dynamics(1, s.Z2.X[1], u2, nullptr, nullptr);
    batch.push_back(s);
  }

  ParamGrads g;
  g.setZero(p);
  const double f0 = br_loss(p, game, batch, cfg, &g);
  CHECK(std::isfinite(f0));

  const double h = 1e-6;
  double worst = 0.0;
  Rng pick(33);
  for (int layer = 0; layer < p.layers(); ++layer) {
    for (int probe = 0; probe < 6; ++probe) {
      const int i = static_cast<int>(pick.uniform_index(p.W[layer].rows()));
      const int j = static_cast<int>(pick.uniform_index(p.W[layer].cols()));
      SurrogateParams pp = p, pm = p;
      pp.W[layer](i, j) += h;
      pm.W[layer](i, j) -= h;
      const double fd =
          (br_loss(pp, game, batch, cfg, nullptr) - br_loss(pm, game, batch, cfg, nullptr)) /
          (2 * h);
      worst = std::max(worst, std::abs(fd - g.dW[layer](i, j)) / (1.0 + std::abs(fd)));
    }
    for (int probe = 0; probe < 3; ++probe) {
      const int i = static_cast<int>(pick.uniform_index(p.b[layer].size()));
      SurrogateParams pp = p, pm = p;
      pp.b[layer][i] += h;
      pm.b[layer][i] -= h;
      const double fd =
          (br_loss(pp, game, batch, cfg, nullptr) - br_loss(pm, game, batch, cfg, nullptr)) /
          (2 * h);
      worst = std::max(worst, std::abs(fd - g.db[layer][i]) / (1.0 + std::abs(fd)));
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("training learns a teacher network's behaviour") {
  GameSpec game = small_game(2);
  SurrogateParams teacher = init_surrogate(game, 1, {8}, 41);
  for (auto& W : teacher.W) W *= 3.0;  // move the outputs away from the midpoint

  Rng r(51);
  std::vector<BRSample> data;
  for (int i = 0; i < 64; ++i) {
    BRSample s;
    s.x1_0 = game.x0[0];
    s.x2_0 = game.x0[1];
    s.X1 = random_states(game.N, 4, r);
    s.Z2 = surrogate_rollout(teacher, game, s.x2_0, s.X1);
    data.push_back(s);
  }

  TrainingConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 16;
  cfg.lr = 3e-3;
  cfg.lambda_g = 0.0;
  cfg.hidden_widths = {8};
  cfg.seed = 4;
  TrainResult res = train(data, game, cfg);
  REQUIRE(res.best_epoch >= 0);
  CHECK(res.val_loss[res.best_epoch] == doctest::Approx(res.best_val).epsilon(1e-12));
  // Training must improve markedly over the first epoch's validation loss.
  CHECK(res.best_val < 0.2 * res.val_loss.front());
}

TEST_CASE("training is deterministic") {
  GameSpec game = small_game(2);
  Rng r(61);
  std::vector<BRSample> data;
  for (int i = 0; i < 32; ++i) {
    BRSample s;
    s.x1_0 = game.x0[0];
    s.x2_0 = game.x0[1];
    s.X1 = random_states(game.N, 4, r);
    Vec u(2);
    u << 0.3, 0.05;
    s.Z2.U = {u, u};
    s.Z2.X.resize(3);
    s.Z2.X[0] = game.x0[1];
    s.Z2.X[1] = game.dynamics(1, s.Z2.X[0], u, nullptr, nullptr);
    s.Z2.X[2] = game.dynamics(1, s.Z2.X[1], u, nullptr, nullptr);
    data.push_back(s);
  }
  TrainingConfig cfg;
  cfg.epochs = 10;
  cfg.batch_size = 8;
  cfg.hidden_widths = {6};
  cfg.seed = 9;
  TrainResult a = train(data, game, cfg);
  TrainResult b = train(data, game, cfg);
  REQUIRE(a.train_loss.size() == b.train_loss.size());
  for (size_t i = 0; i < a.train_loss.size(); ++i) {
    CHECK(a.train_loss[i] == b.train_loss[i]);
    CHECK(a.val_loss[i] == b.val_loss[i]);
  }
  for (int l = 0; l < a.params.layers(); ++l) {
    CHECK((a.params.W[l] - b.params.W[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.params.b[l] - b.params.b[l]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("surrogate parameters round-trip bit-exactly through the container") {
  GameSpec game = small_game();
  SurrogateParams p = init_surrogate(game, 1, {16, 8}, 77);
  p.feat_mu = Vec::Random(p.input_dim());
  p.feat_sigma = (Vec::Random(p.input_dim()).array().abs() + 0.5).matrix();
  const std::string path = "/tmp/brnash_test_surrogate.bin";
  save_surrogate(path, p);
  SurrogateParams q = load_surrogate(path);
  std::filesystem::remove(path);

  REQUIRE(q.layers() == p.layers());
  CHECK(q.N == p.N);
  CHECK(q.n1 == p.n1);
  CHECK(q.n2 == p.n2);
  CHECK(q.m2 == p.m2);
  for (int l = 0; l < p.layers(); ++l) {
    CHECK(q.W[l].rows() == p.W[l].rows());
    CHECK((q.W[l] - p.W[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((q.b[l] - p.b[l]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK((q.feat_mu - p.feat_mu).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.feat_sigma - p.feat_sigma).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.out_mid - p.out_mid).cwiseAbs().maxCoeff() == 0.0);
  CHECK((q.out_half - p.out_half).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("learned operator plugs into the reduced solver") {
  GameSpec game = small_game();
  SurrogateParams p = init_surrogate(game, 1, {8}, 13);
  BestResponseOperator op = make_learned_br_operator(game, p);
  CHECK(op.kind == BestResponseOperator::Kind::Learned);

  Rng r(71);
  auto X1 = random_states(game.N, 4, r);
  Trajectory Z = op.evaluate(X1, game.x0[1]);
  CHECK((flatten(Z) - flatten(surrogate_rollout(p, game, game.x0[1], X1))).cwiseAbs()
            .maxCoeff() == 0.0);

  Mat J = op.jacobian(X1, game.x0[1]);
  Mat Jref = surrogate_jacobian(p, game, game.x0[1], X1);
  CHECK((J - Jref).cwiseAbs().maxCoeff() == 0.0);
}

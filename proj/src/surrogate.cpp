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

#include "brnash/surrogate.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "brnash/racing.hpp"
#include "brnash/rng.hpp"

namespace brnash {

namespace {

// Forward pass with everything the backward pass needs.
struct ForwardTrace {
  Vec phi;              // raw features
  std::vector<Vec> h;   // h[0] = standardized input, h[l] = tanh activation of layer l-1
  Vec raw;              // linear output
  Vec u;                // squashed output
};

void forward_trace(const SurrogateParams& p, const Vec& phi, ForwardTrace& tr) {
  if (phi.size() != p.input_dim())
    throw std::invalid_argument("mlp_forward: feature length mismatch");
  const int L = p.layers();
  tr.phi = phi;
  tr.h.resize(L);
  tr.h[0] = (phi - p.feat_mu).cwiseQuotient(p.feat_sigma);
  for (int l = 0; l + 1 < L; ++l) {
    tr.h[l + 1] = (p.W[l] * tr.h[l] + p.b[l]).array().tanh();
  }
  tr.raw = p.W[L - 1] * tr.h[L - 1] + p.b[L - 1];
  tr.u = squash(p, tr.raw);
}

// Rollout with stored step Jacobians.
struct RolloutTrace {
  std::vector<Vec> X;   // N+1 states
  std::vector<Mat> A;   // N state Jacobians
  std::vector<Mat> B;   // N input Jacobians
};

void rollout_trace(const SurrogateParams& p, const GameSpec& game, const Vec& x2_0,
                   const Vec& u_flat, RolloutTrace& rt, bool with_jac) {
  const int N = p.N, m = p.m2;
  rt.X.resize(N + 1);
  rt.X[0] = x2_0;
  if (with_jac) {
    rt.A.assign(N, Mat());
    rt.B.assign(N, Mat());
  }
  for (int k = 0; k < N; ++k) {
    rt.X[k + 1] = game.dynamics(1, rt.X[k], u_flat.segment(k * m, m),
                                with_jac ? &rt.A[k] : nullptr, with_jac ? &rt.B[k] : nullptr);
  }
}

}  // namespace

void ParamGrads::setZero(const SurrogateParams& p) {
  dW.resize(p.layers());
  db.resize(p.layers());
  for (int l = 0; l < p.layers(); ++l) {
    dW[l] = Mat::Zero(p.W[l].rows(), p.W[l].cols());
    db[l] = Vec::Zero(p.b[l].size());
  }
}

void ParamGrads::add(const ParamGrads& o, double scale) {
  for (std::size_t l = 0; l < dW.size(); ++l) {
    dW[l] += scale * o.dW[l];
    db[l] += scale * o.db[l];
  }
}

double ParamGrads::squared_norm() const {
  double s = 0.0;
  for (std::size_t l = 0; l < dW.size(); ++l) s += dW[l].squaredNorm() + db[l].squaredNorm();
  return s;
}

Vec featurize(const Vec& x2_0, const std::vector<Vec>& X1, int N) {
  if (static_cast<int>(X1.size()) != N + 1)
    throw std::invalid_argument("featurize: X1 must hold N+1 states");
  const int n1 = X1.empty() ? 0 : static_cast<int>(X1[0].size());
  const int n2 = static_cast<int>(x2_0.size());
  Vec phi(n2 + n1 * (N + 1));
  phi.head(n2) = x2_0;
  for (int k = 0; k <= N; ++k) phi.segment(n2 + k * n1, n1) = X1[k];
  return phi;
}

Vec mlp_forward(const SurrogateParams& p, const Vec& phi) {
  ForwardTrace tr;
  forward_trace(p, phi, tr);
  return tr.raw;
}

Vec squash(const SurrogateParams& p, const Vec& raw) {
  // tanh rounds to exactly +-1.0 for |raw| >~ 19, which would place the
  // output exactly on the box boundary; the map must stay in the OPEN box
  // for any parameter values, so pull saturated channels one epsilon inside.
  constexpr double kSat = 1.0 - 1e-12;
  const Vec t = raw.array().tanh().min(kSat).max(-kSat).matrix();
  return p.out_mid + p.out_half.cwiseProduct(t);
}

Trajectory surrogate_rollout(const SurrogateParams& p, const GameSpec& game, const Vec& x2_0,
                             const std::vector<Vec>& X1) {
  ForwardTrace tr;
  forward_trace(p, featurize(x2_0, X1, p.N), tr);
  RolloutTrace rt;
  rollout_trace(p, game, x2_0, tr.u, rt, /*with_jac=*/false);
  Trajectory z;
  z.X = rt.X;
  z.U.resize(p.N);
  for (int k = 0; k < p.N; ++k) z.U[k] = tr.u.segment(k * p.m2, p.m2);
  return z;
}

Mat surrogate_jacobian(const SurrogateParams& p, const GameSpec& game, const Vec& x2_0,
                       const std::vector<Vec>& X1) {
  const int L = p.layers();
  const int N = p.N, n1 = p.n1, n2 = p.n2, m2 = p.m2;
  const int in_x1 = n1 * (N + 1);

  ForwardTrace tr;
  forward_trace(p, featurize(x2_0, X1, N), tr);

  // Network Jacobian d raw / d phi, then squash and standardization scaling.
  Mat Jn = p.W[0] * p.feat_sigma.cwiseInverse().asDiagonal();
  for (int l = 1; l < L; ++l) {
    const Vec d = Vec::Ones(tr.h[l].size()) - tr.h[l].cwiseProduct(tr.h[l]);
    Jn = p.W[l] * d.asDiagonal() * Jn;
  }
  const Vec draw =
      p.out_half.cwiseProduct((Vec::Ones(tr.raw.size()) -
                               tr.raw.array().tanh().square().matrix()));
  // d u_flat / d X1 block (columns after the leading x2_0 block).
  const Mat Ju = draw.asDiagonal() * Jn.rightCols(in_x1);

  RolloutTrace rt;
  rollout_trace(p, game, x2_0, tr.u, rt, /*with_jac=*/true);

  // States by forward accumulation; rows in flatten order [X; U].
  const int z_dim = (N + 1) * n2 + N * m2;
  Mat J = Mat::Zero(z_dim, in_x1);
  Mat dx = Mat::Zero(n2, in_x1);  // d xhat_0 / d X1 = 0
  for (int k = 0; k < N; ++k) {
    dx = rt.A[k] * dx + rt.B[k] * Ju.middleRows(k * m2, m2);
    J.middleRows((k + 1) * n2, n2) = dx;
  }
  J.middleRows((N + 1) * n2, N * m2) = Ju;
  return J;
}

double br_loss(const SurrogateParams& p, const GameSpec& game,
               const std::vector<BRSample>& batch, const TrainingConfig& cfg,
               ParamGrads* grads) {
  if (batch.empty()) throw std::invalid_argument("br_loss: empty batch");
  const bool collision = cfg.lambda_g != 0.0;
  if (collision && (p.n1 < 4 || p.n2 < 4))
    throw std::invalid_argument("br_loss: collision term requires (v,psi,s,t) state layout");

  const int N = p.N, n2 = p.n2, m2 = p.m2;
  const int L = p.layers();
  const double d2 = cfg.d_safe * cfg.d_safe;

  if (grads) grads->setZero(p);

  double total = 0.0;
  ParamGrads gs;
  for (const BRSample& smp : batch) {
    ForwardTrace tr;
    forward_trace(p, featurize(smp.x2_0, smp.X1, N), tr);
    RolloutTrace rt;
    rollout_trace(p, game, smp.x2_0, tr.u, rt, /*with_jac=*/grads != nullptr);

    // ---- loss value -----------------------------------------------------
    double loss = 0.0;
    double wk = 1.0;
    for (int k = 0; k < N; ++k, wk *= cfg.gamma) {
      loss += cfg.lambda_u * wk *
              (tr.u.segment(k * m2, m2) - smp.Z2.U[k]).squaredNorm();
    }
    wk = 1.0;
    for (int k = 0; k <= N; ++k, wk *= cfg.gamma) {
      loss += cfg.lambda_x * wk * (rt.X[k] - smp.Z2.X[k]).squaredNorm();
    }
    std::vector<double> relu_m(N + 1, 0.0);
    if (collision) {
      for (int k = 0; k <= N; ++k) {
        const Eigen::Vector2d p1 =
            frenet_to_cartesian(smp.X1[k][FS_S], smp.X1[k][FS_T], cfg.track);
        const Eigen::Vector2d p2 =
            frenet_to_cartesian(rt.X[k][FS_S], rt.X[k][FS_T], cfg.track);
        const double m = d2 - (p1 - p2).squaredNorm();
        relu_m[k] = std::max(0.0, m);
        loss += cfg.lambda_g * relu_m[k] * relu_m[k];
      }
    }
    total += loss;
    if (!grads) continue;

    // ---- backward pass ----------------------------------------------------
    // Direct state gradients (tracking error + collision penalty).
    std::vector<Vec> q(N + 1, Vec::Zero(n2));
    wk = 1.0;
    for (int k = 0; k <= N; ++k, wk *= cfg.gamma) {
      q[k] = 2.0 * cfg.lambda_x * wk * (rt.X[k] - smp.Z2.X[k]);
      if (collision && relu_m[k] > 0.0) {
        Mat Jp(2, 2);
        const Eigen::Vector2d p2 =
            frenet_to_cartesian(rt.X[k][FS_S], rt.X[k][FS_T], cfg.track, &Jp);
        const Eigen::Vector2d p1 =
            frenet_to_cartesian(smp.X1[k][FS_S], smp.X1[k][FS_T], cfg.track);
        // d/dxhat [relu(m)^2] = 2 relu(m) * (-2 Jp^T (p2 - p1)) on (s,t).
        const Eigen::Vector2d gst =
            -4.0 * cfg.lambda_g * relu_m[k] * (Jp.transpose() * (p2 - p1));
        q[k][FS_S] += gst[0];
        q[k][FS_T] += gst[1];
      }
    }
    // Adjoint sweep and input gradients.
    Vec ghat = Vec::Zero(m2 * N);
    Vec abar = q[N];
    for (int k = N - 1; k >= 0; --k) {
      ghat.segment(k * m2, m2) =
          2.0 * cfg.lambda_u * std::pow(cfg.gamma, k) *
              (tr.u.segment(k * m2, m2) - smp.Z2.U[k]) +
          rt.B[k].transpose() * abar;
      abar = q[k] + rt.A[k].transpose() * abar;
    }
    // Through the squash into the network.
    Vec delta = ghat.cwiseProduct(p.out_half).cwiseProduct(
        (Vec::Ones(tr.raw.size()) - tr.raw.array().tanh().square().matrix()));
    if (gs.dW.empty()) gs.setZero(p);
    for (int l = L - 1; l >= 0; --l) {
      gs.dW[l].noalias() += delta * tr.h[l].transpose();
      gs.db[l] += delta;
      if (l > 0) {
        Vec e = p.W[l].transpose() * delta;
        delta = e.cwiseProduct(Vec::Ones(tr.h[l].size()) - tr.h[l].cwiseProduct(tr.h[l]));
      }
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  if (grads) grads->add(gs, inv);
  return total * inv;
}

SurrogateParams init_surrogate(const GameSpec& game, int responder,
                               const std::vector<int>& hidden_widths, std::uint64_t seed) {
  SurrogateParams p;
  p.N = game.N;
  p.n1 = game.nx[1 - responder];
  p.n2 = game.nx[responder];
  p.m2 = game.nu[responder];

  std::vector<int> widths;
  widths.push_back(p.input_dim());
  for (int w : hidden_widths) widths.push_back(w);
  widths.push_back(p.output_dim());

  const int L = static_cast<int>(widths.size()) - 1;
  p.W.resize(L);
  p.b.resize(L);
  for (int l = 0; l < L; ++l) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(l)));
    const int fan_in = widths[l], fan_out = widths[l + 1];
    const double lim = std::sqrt(6.0 / (fan_in + fan_out));
    p.W[l] = Mat(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) p.W[l](r, c) = rng.uniform(-lim, lim);
    p.b[l] = Vec::Zero(fan_out);
  }

  p.feat_mu = Vec::Zero(p.input_dim());
  p.feat_sigma = Vec::Ones(p.input_dim());

  p.out_mid = Vec(p.output_dim());
  p.out_half = Vec(p.output_dim());
  for (int k = 0; k < p.N; ++k) {
    for (int d = 0; d < p.m2; ++d) {
      const double lo = game.u_lo[responder][d];
      const double hi = game.u_hi[responder][d];
      p.out_mid[k * p.m2 + d] = 0.5 * (lo + hi);
      p.out_half[k * p.m2 + d] = 0.5 * (hi - lo);
    }
  }
  return p;
}

BestResponseOperator make_learned_br_operator(const GameSpec& game, const SurrogateParams& p) {
  auto gs = std::make_shared<const GameSpec>(game);
  auto ps = std::make_shared<const SurrogateParams>(p);
  BestResponseOperator op;
  op.kind = BestResponseOperator::Kind::Learned;
  op.responder = 1;
  op.evaluate = [gs, ps](const std::vector<Vec>& X1, const Vec& x2_0) {
    return surrogate_rollout(*ps, *gs, x2_0, X1);
  };
  op.jacobian = [gs, ps](const std::vector<Vec>& X1, const Vec& x2_0) {
    return surrogate_jacobian(*ps, *gs, x2_0, X1);
  };
  return op;
}

}  // namespace brnash

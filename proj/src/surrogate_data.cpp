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

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>

#include <json.hpp>

#include "brnash/harness.hpp"
#include "brnash/parallel.hpp"
#include "brnash/racing.hpp"
#include "brnash/rng.hpp"
#include "brnash/surrogate.hpp"

namespace brnash {

namespace {

using nlohmann::json;

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& a) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}

json vecs_to_json(const std::vector<Vec>& xs) {
  json a = json::array();
  for (const Vec& x : xs) a.push_back(vec_to_json(x));
  return a;
}

std::vector<Vec> vecs_from_json(const json& a) {
  std::vector<Vec> xs;
  xs.reserve(a.size());
  for (const json& x : a) xs.push_back(vec_from_json(x));
  return xs;
}

// One labeled sample attempt; std::nullopt when any stage fails.
std::optional<BRSample> attempt_sample(const RacingParams& rp, std::uint64_t attempt_seed,
                                       bool random_plan) {
  std::pair<Vec, Vec> ics;
  try {
    ics = sample_initial_conditions(rp, attempt_seed);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  GameSpec game = make_racing_game(rp, ics.first, ics.second);

  SolverOptions bopts;
  bopts.tol = 1e-8;

  std::vector<Vec> X1;
  if (random_plan) {
    // Random bounded inputs rolled out from x1_0.
    Rng rng(derive_seed(attempt_seed, 7));
    std::vector<Vec> U1(game.N);
    for (int k = 0; k < game.N; ++k) {
      Vec u(game.nu[0]);
      for (int d = 0; d < game.nu[0]; ++d)
        u[d] = rng.uniform(game.u_lo[0][d], game.u_hi[0][d]);
      U1[k] = u;
    }
    X1 = rollout(game, 0, ics.first, U1);
  } else {
    // Player 1's best response against a constant-velocity extrapolation of
    // Player 2 (zero inputs hold speed and steering).
    Trajectory cruise2;
    cruise2.U.assign(game.N, Vec::Zero(game.nu[1]));
    cruise2.X = rollout(game, 1, ics.second, cruise2.U);
    auto [plan1, o1] = exact_br(game, 0, cruise2.X, nullptr, bopts);
    if (o1.status != SolveStatus::Succeeded) return std::nullopt;
    X1 = plan1.X;
  }

  auto [label, o2] = exact_br(game, 1, X1, nullptr, bopts);
  if (o2.status != SolveStatus::Succeeded) return std::nullopt;

  BRSample s;
  s.x1_0 = ics.first;
  s.x2_0 = ics.second;
  s.X1 = X1;
  s.Z2 = label;
  return s;
}

}  // namespace

std::vector<BRSample> generate_dataset(const RacingParams& rp, int n_samples,
                                       std::uint64_t seed, int workers,
                                       DatasetGenReport* report) {
  if (n_samples < 1) throw std::invalid_argument("generate_dataset: n_samples must be >= 1");

  std::vector<BRSample> out;
  out.reserve(n_samples);
  long long attempt_base = 0;
  int discarded = 0;

  while (static_cast<int>(out.size()) < n_samples) {
    const int want = n_samples - static_cast<int>(out.size());
    const int block = std::max(want, 32);
    std::vector<std::optional<BRSample>> slots(block);
    parallel_for(static_cast<std::size_t>(block), workers, [&](std::size_t i) {
      const long long a = attempt_base + static_cast<long long>(i);
      slots[i] = attempt_sample(rp, derive_seed(seed, static_cast<std::uint64_t>(a)),
                                /*random_plan=*/(a % 2) == 1);
    });
    for (int i = 0; i < block && static_cast<int>(out.size()) < n_samples; ++i) {
      if (slots[i].has_value()) {
        out.push_back(std::move(*slots[i]));
      } else {
        ++discarded;
      }
    }
    attempt_base += block;
    if (attempt_base > 50LL * n_samples + 1000) {
      throw std::runtime_error("generate_dataset: discard rate too high");
    }
  }

  if (report) {
    report->n_samples = n_samples;
    report->n_attempts = static_cast<int>(attempt_base);
    report->n_discarded = discarded;
  }
  return out;
}

void save_dataset(const std::string& path, const std::vector<BRSample>& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_dataset: cannot open " + path);
  for (const BRSample& s : data) {
    json j;
    j["x1_0"] = vec_to_json(s.x1_0);
    j["x2_0"] = vec_to_json(s.x2_0);
    j["X1"] = vecs_to_json(s.X1);
    j["X2"] = vecs_to_json(s.Z2.X);
    j["U2"] = vecs_to_json(s.Z2.U);
    f << j.dump() << '\n';
  }
}

std::vector<BRSample> load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_dataset: cannot open " + path);
  std::vector<BRSample> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    BRSample s;
    s.x1_0 = vec_from_json(j.at("x1_0"));
    s.x2_0 = vec_from_json(j.at("x2_0"));
    s.X1 = vecs_from_json(j.at("X1"));
    s.Z2.X = vecs_from_json(j.at("X2"));
    s.Z2.U = vecs_from_json(j.at("U2"));
    out.push_back(std::move(s));
  }
  return out;
}

void save_surrogate(const std::string& path, const SurrogateParams& p) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_surrogate: cannot open " + path);

  json header;
  header["N"] = p.N;
  header["n1"] = p.n1;
  header["n2"] = p.n2;
  header["m2"] = p.m2;
  json widths = json::array();
  widths.push_back(p.input_dim());
  for (const Mat& W : p.W) widths.push_back(static_cast<int>(W.rows()));
  header["widths"] = widths;
  const std::string hs = header.dump();

  const char magic[4] = {'B', 'R', 'S', 'P'};
  const std::uint32_t version = 1;
  const std::uint32_t hlen = static_cast<std::uint32_t>(hs.size());
  f.write(magic, 4);
  f.write(reinterpret_cast<const char*>(&version), 4);
  f.write(reinterpret_cast<const char*>(&hlen), 4);
  f.write(hs.data(), hlen);

  auto put_vec = [&f](const Vec& v) {
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
  };
  put_vec(p.feat_mu);
  put_vec(p.feat_sigma);
  put_vec(p.out_mid);
  put_vec(p.out_half);
  for (std::size_t l = 0; l < p.W.size(); ++l) {
    // Row-major serialization of each weight matrix.
    const Mat& W = p.W[l];
    for (int r = 0; r < W.rows(); ++r)
      for (int c = 0; c < W.cols(); ++c) {
        const double x = W(r, c);
        f.write(reinterpret_cast<const char*>(&x), sizeof(double));
      }
    put_vec(p.b[l]);
  }
  if (!f) throw std::runtime_error("save_surrogate: write failed for " + path);
}

SurrogateParams load_surrogate(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_surrogate: cannot open " + path);

  char magic[4];
  std::uint32_t version = 0, hlen = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&version), 4);
  f.read(reinterpret_cast<char*>(&hlen), 4);
  if (!f || std::string(magic, 4) != "BRSP")
    throw std::runtime_error("load_surrogate: bad magic in " + path);
  if (version != 1) throw std::runtime_error("load_surrogate: unsupported version");
  std::string hs(hlen, '\0');
  f.read(hs.data(), hlen);
  const json header = json::parse(hs);

  SurrogateParams p;
  p.N = header.at("N").get<int>();
  p.n1 = header.at("n1").get<int>();
  p.n2 = header.at("n2").get<int>();
  p.m2 = header.at("m2").get<int>();
  const std::vector<int> widths = header.at("widths").get<std::vector<int>>();
  if (widths.size() < 2 || widths.front() != p.input_dim() || widths.back() != p.output_dim())
    throw std::runtime_error("load_surrogate: inconsistent widths header");

  auto get_vec = [&f, &path](int n) {
    Vec v(n);
    f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
    if (!f) throw std::runtime_error("load_surrogate: truncated file " + path);
    return v;
  };
  p.feat_mu = get_vec(p.input_dim());
  p.feat_sigma = get_vec(p.input_dim());
  p.out_mid = get_vec(p.output_dim());
  p.out_half = get_vec(p.output_dim());
  const int L = static_cast<int>(widths.size()) - 1;
  p.W.resize(L);
  p.b.resize(L);
  for (int l = 0; l < L; ++l) {
    p.W[l] = Mat(widths[l + 1], widths[l]);
    for (int r = 0; r < p.W[l].rows(); ++r)
      for (int c = 0; c < p.W[l].cols(); ++c) {
        double x;
        f.read(reinterpret_cast<char*>(&x), sizeof(double));
        p.W[l](r, c) = x;
      }
    p.b[l] = get_vec(widths[l + 1]);
  }
  if (!f) throw std::runtime_error("load_surrogate: truncated file " + path);
  return p;
}

ValidationMetrics validation_metrics(const SurrogateParams& p, const GameSpec& game,
                                     const std::vector<BRSample>& valset,
                                     const TrackParams& track, double d_safe, int workers) {
  if (valset.empty()) throw std::invalid_argument("validation_metrics: empty set");
  const int M = static_cast<int>(valset.size());
  const int N = p.N;

  // Per-sample accumulators (slot-indexed; reduced in index order).
  struct Acc {
    double se_a = 0, se_delta = 0;
    double se_v = 0, se_psi = 0, se_s = 0, se_t = 0;
    double se_pos = 0;
    double max_viol = 0;
  };
  std::vector<Acc> acc(M);

  parallel_for(static_cast<std::size_t>(M), workers, [&](std::size_t i) {
    const BRSample& smp = valset[i];
    const Trajectory zhat = surrogate_rollout(p, game, smp.x2_0, smp.X1);
    Acc a;
    for (int k = 0; k < N; ++k) {
      const Vec du = zhat.U[k] - smp.Z2.U[k];
      a.se_a += du[FU_A] * du[FU_A];
      a.se_delta += du[FU_DELTA] * du[FU_DELTA];
    }
    for (int k = 1; k <= N; ++k) {
      const Vec dx = zhat.X[k] - smp.Z2.X[k];
      a.se_v += dx[FS_V] * dx[FS_V];
      a.se_psi += dx[FS_PSI] * dx[FS_PSI];
      a.se_s += dx[FS_S] * dx[FS_S];
      a.se_t += dx[FS_T] * dx[FS_T];
      const Eigen::Vector2d ph = frenet_to_cartesian(zhat.X[k][FS_S], zhat.X[k][FS_T], track);
      const Eigen::Vector2d pl =
          frenet_to_cartesian(smp.Z2.X[k][FS_S], smp.Z2.X[k][FS_T], track);
      a.se_pos += (ph - pl).squaredNorm();
    }
    for (int k = 0; k <= N; ++k) {
      const Eigen::Vector2d p1 = frenet_to_cartesian(smp.X1[k][FS_S], smp.X1[k][FS_T], track);
      const Eigen::Vector2d p2 = frenet_to_cartesian(zhat.X[k][FS_S], zhat.X[k][FS_T], track);
      const double viol = std::max(0.0, d_safe * d_safe - (p1 - p2).squaredNorm());
      a.max_viol = std::max(a.max_viol, viol);
    }
    acc[i] = a;
  });

  Acc tot;
  for (const Acc& a : acc) {
    tot.se_a += a.se_a;
    tot.se_delta += a.se_delta;
    tot.se_v += a.se_v;
    tot.se_psi += a.se_psi;
    tot.se_s += a.se_s;
    tot.se_t += a.se_t;
    tot.se_pos += a.se_pos;
    tot.max_viol = std::max(tot.max_viol, a.max_viol);
  }

  ValidationMetrics vm;
  const double nu = static_cast<double>(M) * N;  // control steps
  const double ns = static_cast<double>(M) * N;  // predicted state steps (k = 1..N)
  vm.rmse_a = std::sqrt(tot.se_a / nu);
  vm.rmse_delta = std::sqrt(tot.se_delta / nu);
  vm.rmse_v = std::sqrt(tot.se_v / ns);
  vm.rmse_psi = std::sqrt(tot.se_psi / ns);
  vm.rmse_s = std::sqrt(tot.se_s / ns);
  vm.rmse_t = std::sqrt(tot.se_t / ns);
  vm.rmse_pos = std::sqrt(tot.se_pos / ns);
  vm.max_col_violation = tot.max_viol;
  vm.n_samples = M;
  return vm;
}

}  // namespace brnash

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
//
// Compares the worker-pool kernels against their serial reference on the
// two hot paths (dataset generation and validation metrics) and checks that
// results are bit-identical for any worker count.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "brnash/parallel.hpp"
#include "brnash/racing.hpp"
#include "brnash/surrogate.hpp"

using namespace brnash;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

bool bits_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

bool same_samples(const std::vector<BRSample>& a, const std::vector<BRSample>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!bits_equal(a[i].x1_0, b[i].x1_0) || !bits_equal(a[i].x2_0, b[i].x2_0)) return false;
    if (a[i].X1.size() != b[i].X1.size() || a[i].Z2.X.size() != b[i].Z2.X.size() ||
        a[i].Z2.U.size() != b[i].Z2.U.size())
      return false;
    for (std::size_t k = 0; k < a[i].X1.size(); ++k)
      if (!bits_equal(a[i].X1[k], b[i].X1[k])) return false;
    for (std::size_t k = 0; k < a[i].Z2.X.size(); ++k)
      if (!bits_equal(a[i].Z2.X[k], b[i].Z2.X[k])) return false;
    for (std::size_t k = 0; k < a[i].Z2.U.size(); ++k)
      if (!bits_equal(a[i].Z2.U[k], b[i].Z2.U[k])) return false;
  }
  return true;
}

bool same_metrics(const ValidationMetrics& a, const ValidationMetrics& b) {
  return a.rmse_a == b.rmse_a &&
         a.rmse_delta == b.rmse_delta && a.rmse_v == b.rmse_v && a.rmse_psi == b.rmse_psi &&
         a.rmse_s == b.rmse_s && a.rmse_t == b.rmse_t && a.rmse_pos == b.rmse_pos &&
         a.max_col_violation == b.max_col_violation;
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 16;
  const int hw = hardware_workers();
  std::printf("hardware workers: %d, dataset size: %d\n\n", hw, n);
  std::printf("%-22s %10s %10s %9s %10s\n", "kernel", "serial[s]", "parallel", "speedup",
              "identical");

  bool all_same = true;
  const RacingParams rp;

  double t0 = now_s();
  const std::vector<BRSample> d1 = generate_dataset(rp, n, 3, 1, nullptr);
  double t1 = now_s();
  const std::vector<BRSample> d2 = generate_dataset(rp, n, 3, hw, nullptr);
  double t2 = now_s();
  {
    const bool same = same_samples(d1, d2);
    all_same = all_same && same;
    std::printf("%-22s %10.3f %10.3f %8.2fx %10s\n", "generate_dataset", t1 - t0, t2 - t1,
                (t1 - t0) / std::max(1e-9, t2 - t1), same ? "yes" : "NO");
  }

  {
    const GameSpec game = make_racing_game(rp, Vec::Zero(4), Vec::Zero(4));
    const SurrogateParams params = init_surrogate(game, 1, {32, 32}, 11);
    // Inflate the set so the per-sample work is worth distributing.
    std::vector<BRSample> big;
    big.reserve(2000);
    while (big.size() < 2000)
      for (const BRSample& s : d1) {
        big.push_back(s);
        if (big.size() >= 2000) break;
      }
    t0 = now_s();
    const ValidationMetrics m1 =
        validation_metrics(params, game, big, rp.track, rp.bounds.d_safe, 1);
    t1 = now_s();
    const ValidationMetrics m2 =
        validation_metrics(params, game, big, rp.track, rp.bounds.d_safe, hw);
    t2 = now_s();
    const bool same = same_metrics(m1, m2);
    all_same = all_same && same;
    std::printf("%-22s %10.3f %10.3f %8.2fx %10s\n", "validation_metrics", t1 - t0, t2 - t1,
                (t1 - t0) / std::max(1e-9, t2 - t1), same ? "yes" : "NO");
  }

  std::printf("\n%s\n", all_same ? "all kernels agree with the serial reference"
                                 : "MISMATCH against the serial reference");
  return all_same ? 0 : 1;
}

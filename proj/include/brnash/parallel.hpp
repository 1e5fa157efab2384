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

#include <cstddef>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace brnash {

// Serial reference loop. Kept as a distinct entry point so tests and the
// bench_parallel tool can compare it against the OpenMP path; embarrassingly
// parallel stages (dataset generation, Monte Carlo trials, validation
// metrics) must produce bit-identical results through either one.
template <class F>
void serial_for(std::size_t n, F&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

// OpenMP work loop over [0, n). Bodies must write only to slot-indexed
// storage (results[i]) so the output is independent of scheduling; any
// reductions over the slots are performed by the caller in index order.
// workers <= 1 falls back to the serial reference loop.
template <class F>
void parallel_for(std::size_t n, int workers, F&& body) {
#if defined(_OPENMP)
  if (workers > 1) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
    for (long long i = 0; i < nn; ++i) body(static_cast<std::size_t>(i));
    return;
  }
#else
  (void)workers;
#endif
  serial_for(n, body);
}

inline int hardware_workers() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace brnash

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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <vector>

#include "brnash/harness.hpp"

namespace brnash {

namespace {

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// value,ecdf rows over the sorted sample (step function evaluated at the
// sample points: F(x_(i)) = i/n).
void write_ecdf(const std::string& path, std::vector<double> values) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_report_files: cannot open " + path);
  f << "value,ecdf\n";
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    f << fmt(values[i]) << ',' << fmt(static_cast<double>(i + 1) / n) << '\n';
}

// Fixed-width bins spanning [min, max]; bin_lo,bin_hi,count rows.
void write_hist(const std::string& path, const std::vector<double>& values, int n_bins) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_report_files: cannot open " + path);
  f << "bin_lo,bin_hi,count\n";
  if (values.empty()) return;
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (hi <= lo) hi = lo + 1.0;
  const double w = (hi - lo) / n_bins;
  std::vector<int> counts(n_bins, 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / w);
    b = std::clamp(b, 0, n_bins - 1);
    ++counts[b];
  }
  for (int b = 0; b < n_bins; ++b)
    f << fmt(lo + b * w) << ',' << fmt(lo + (b + 1) * w) << ',' << counts[b] << '\n';
}

}  // namespace

void write_report_files(const std::string& out_dir, const std::vector<TrialResult>& results,
                        Method baseline) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::map<int, double> base_j1;
  for (const TrialResult& r : results)
    if (r.method == baseline && r.status == SolveStatus::Succeeded) base_j1[r.id] = r.J1;

  for (const Method m : {Method::Reduced, Method::Ibr, Method::Joint}) {
    std::vector<const TrialResult*> rows;
    for (const TrialResult& r : results)
      if (r.method == m) rows.push_back(&r);
    if (rows.empty()) continue;
    std::sort(rows.begin(), rows.end(),
              [](const TrialResult* a, const TrialResult* b) { return a->id < b->id; });

    std::vector<double> margins, times, iters, dj1;
    for (const TrialResult* r : rows) {
      if (std::isfinite(r->min_margin)) margins.push_back(r->min_margin);
      if (r->status == SolveStatus::Succeeded) {
        times.push_back(r->wall_time_s);
        iters.push_back(static_cast<double>(r->iterations));
        auto it = base_j1.find(r->id);
        if (it != base_j1.end()) dj1.push_back(r->J1 - it->second);
      }
    }

    const std::string tag = to_string(m);
    write_ecdf((fs::path(out_dir) / ("ecdf_margin_" + tag + ".csv")).string(), margins);
    write_ecdf((fs::path(out_dir) / ("ecdf_time_" + tag + ".csv")).string(), times);
    write_hist((fs::path(out_dir) / ("hist_iterations_" + tag + ".csv")).string(), iters, 20);
    write_hist((fs::path(out_dir) / ("hist_dj1_" + tag + ".csv")).string(), dj1, 20);
  }
}

}  // namespace brnash

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
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "brnash/equilibrium.hpp"
#include "brnash/racing.hpp"

namespace brnash {

enum class Method { Reduced, Ibr, Joint };

const char* to_string(Method m);
std::optional<Method> method_from_string(const std::string& s);

// Rejection sampling of a benchmark initial pair: both states uniform within
// the table bounds (s restricted so a full horizon fits on the arc), accepted
// iff the Cartesian proximity is at most prox_max, the initial separation is
// at least d_safe, and bounds hold. Deterministic per seed; throws after
// max_draws rejections.
struct SamplerOptions {
  double prox_max = 0.7;
  int max_draws = 100000;
};
std::pair<Vec, Vec> sample_initial_conditions(const RacingParams& rp, std::uint64_t seed,
                                              const SamplerOptions& so = {});

// Boxes used for the e_bnd diagnostic. These are the reporting bounds (for
// the benchmark: the table boxes including the psi wrap domain), which may be
// tighter than the boxes the solvers enforce.
struct MetricBounds {
  std::array<Vec, 2> x_lo, x_hi, u_lo, u_hi;

  static MetricBounds from_game(const GameSpec& game);
  static MetricBounds racing_table(const RacingParams& rp);
};

// Appendix-style infeasibility diagnostics of a candidate solution pair.
//   e_dyn: worst one-step dynamics defect (inf-norm), both players;
//   e_col: worst violation of the coupled inequality rows (max(0, g));
//   e_bnd: worst box violation against the metric bounds;
//   s_infeas = max of the three, exactly.
// The *_excess fields subtract eps and clamp at zero (stratified reporting).
struct InfeasReport {
  double e_dyn = 0.0, e_col = 0.0, e_bnd = 0.0, s_infeas = 0.0;
  double e_dyn_excess = 0.0, e_col_excess = 0.0, e_bnd_excess = 0.0, s_infeas_excess = 0.0;
};
InfeasReport infeasibility_components(const GameSpec& game, const MetricBounds& mb,
                                      const Trajectory& Z1, const Trajectory& Z2, double eps);

// min over k = 0..N of (||p1_k - p2_k|| - d_safe); negative means an ex-post
// collision violation.
double min_collision_margin(const Trajectory& Z1, const Trajectory& Z2,
                            const TrackParams& track, double d_safe);

// Order statistic with linear interpolation: rank h = (n-1)p, value
// v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)]) on the sorted data.
double percentile(std::vector<double> values, double p);

struct TrialSpec {
  int id = 0;
  std::uint64_t seed = 0;
  Vec x1_0, x2_0;
  Method method = Method::Joint;
  EquilibriumOptions opts;
  bool record_trajectories = false;
  double eps = 1e-6;
};

struct TrialResult {
  int id = 0;
  Method method = Method::Joint;
  SolveStatus status = SolveStatus::NumericalFailure;
  double wall_time_s = 0.0;  // the solve call only
  int iterations = 0;
  InfeasReport infeas;
  double min_margin = std::numeric_limits<double>::quiet_NaN();
  double J1 = 0.0, J2 = 0.0;
  double br_residual = std::numeric_limits<double>::quiet_NaN();  // reduced only
  Trajectory Z1, Z2;  // populated iff record_trajectories
};

// One solve with the shared warm-start policy (zero-input rollouts from the
// trial's initial states) and full diagnostics. `track` may be null for games
// without geometry (margin reported as NaN). `br` is required for Reduced.
TrialResult run_trial(const TrialSpec& spec, const GameSpec& game, const MetricBounds& mb,
                      const TrackParams* track, double d_safe, const BestResponseOperator* br);

struct MonteCarloConfig {
  int n_trials = 100;
  std::vector<Method> methods{Method::Reduced, Method::Ibr, Method::Joint};
  std::uint64_t master_seed = 1;
  int workers = 1;
  EquilibriumOptions opts;
  RacingParams rp;
  bool record_trajectories = false;
  double eps = 1e-6;
  SamplerOptions sampler;
};

// Paired benchmark campaign on the racing game: trial k draws its initial
// pair from derive_seed(master_seed, k); every method sees bit-identical
// initial conditions and initial guesses. Trials run in parallel into
// slot-indexed storage: results are ordered (trial, method) and independent
// of worker count. br_factory builds a fresh best-response operator per
// trial (operators carry caches and are not shared across threads); it is
// only invoked when Reduced is among the methods.
std::vector<TrialResult> run_monte_carlo(
    const MonteCarloConfig& cfg,
    const std::function<BestResponseOperator(const GameSpec&)>& br_factory);

struct MethodSummary {
  Method method = Method::Joint;
  int n_trials = 0;
  int n_success = 0;
  double success_pct = 0.0;
  // Success-only order statistics.
  double median_time = std::numeric_limits<double>::quiet_NaN();
  double p95_time = std::numeric_limits<double>::quiet_NaN();
  double median_iterations = std::numeric_limits<double>::quiet_NaN();
  double p95_iterations = std::numeric_limits<double>::quiet_NaN();
  // Ex-post collision violations (margin < 0), both denominators.
  double coll_viol_pct_success = std::numeric_limits<double>::quiet_NaN();
  double coll_viol_pct_all = 0.0;
  // Counts of non-success statuses.
  int n_infeasible = 0, n_maxiter = 0, n_numerical = 0;
  // Paired cost difference vs the baseline method on instances where both
  // succeeded; absent (n_paired = 0, NaNs) when the joint-success set is empty.
  int n_paired = 0;
  double dj1_median = std::numeric_limits<double>::quiet_NaN();
  double dj1_p95 = std::numeric_limits<double>::quiet_NaN();
  double dj1_mean = std::numeric_limits<double>::quiet_NaN();
  double baseline_abs_j1_median = std::numeric_limits<double>::quiet_NaN();
};

struct SummaryStats {
  Method baseline = Method::Ibr;
  std::vector<MethodSummary> methods;
};

// Permutation-invariant aggregation; times/iterations over successes only;
// Delta J1 = J1_method - J1_baseline on the per-trial paired success set.
SummaryStats summarize(const std::vector<TrialResult>& results, Method baseline);

// JSON-lines resultstream and Table-style CSV summary.
void write_results_jsonl(const std::string& path, const std::vector<TrialResult>& results);
std::vector<TrialResult> read_results_jsonl(const std::string& path);
void write_summary_csv(const std::string& path, const SummaryStats& stats);

// Plot-ready data files (ECDFs of margin/time, iteration and Delta-J1
// histograms) derived from a result set; written under out_dir.
void write_report_files(const std::string& out_dir, const std::vector<TrialResult>& results,
                        Method baseline);

}  // namespace brnash

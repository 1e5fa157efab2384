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

#include "brnash/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "brnash/parallel.hpp"
#include "brnash/rng.hpp"

namespace brnash {

namespace {
using nlohmann::json;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double box_violation(const Vec& v, const Vec& lo, const Vec& hi) {
  double worst = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    worst = std::max(worst, lo[i] - v[i]);
    worst = std::max(worst, v[i] - hi[i]);
  }
  return worst;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::Reduced: return "reduced";
    case Method::Ibr: return "ibr";
    case Method::Joint: return "joint";
  }
  return "unknown";
}

std::optional<Method> method_from_string(const std::string& s) {
  if (s == "reduced") return Method::Reduced;
  if (s == "ibr") return Method::Ibr;
  if (s == "joint") return Method::Joint;
  return std::nullopt;
}

std::pair<Vec, Vec> sample_initial_conditions(const RacingParams& rp, std::uint64_t seed,
                                              const SamplerOptions& so) {
  const Bounds& b = rp.bounds;
  // Keep the whole horizon on the arc: even at top speed the vehicle cannot
  // exit through s = s_max.
  const double s_hi =
      std::min(b.x_hi[FS_S], rp.track.s_max - b.x_hi[FS_V] * rp.N * rp.dt);
  if (!(s_hi > b.x_lo[FS_S]))
    throw std::invalid_argument("sample_initial_conditions: horizon too long for the arc");

  Rng rng(seed);
  auto draw_state = [&]() {
    Vec x(4);
    x[FS_V] = rng.uniform(b.x_lo[FS_V], b.x_hi[FS_V]);
    x[FS_PSI] = rng.uniform(b.x_lo[FS_PSI], b.x_hi[FS_PSI]);
    x[FS_S] = rng.uniform(b.x_lo[FS_S], s_hi);
    x[FS_T] = rng.uniform(b.x_lo[FS_T], b.x_hi[FS_T]);
    return x;
  };

  for (int attempt = 0; attempt < so.max_draws; ++attempt) {
    const Vec x1 = draw_state();
    const Vec x2 = draw_state();
    const Eigen::Vector2d p1 = frenet_to_cartesian(x1[FS_S], x1[FS_T], rp.track);
    const Eigen::Vector2d p2 = frenet_to_cartesian(x2[FS_S], x2[FS_T], rp.track);
    const double d = (p1 - p2).norm();
    if (d <= so.prox_max && d >= b.d_safe) return {x1, x2};
  }
  throw std::runtime_error("sample_initial_conditions: rejection budget exceeded");
}

MetricBounds MetricBounds::from_game(const GameSpec& game) {
  MetricBounds mb;
  for (int p = 0; p < 2; ++p) {
    mb.x_lo[p] = game.x_lo[p];
    mb.x_hi[p] = game.x_hi[p];
    mb.u_lo[p] = game.u_lo[p];
    mb.u_hi[p] = game.u_hi[p];
  }
  return mb;
}

MetricBounds MetricBounds::racing_table(const RacingParams& rp) {
  // The full table boxes, psi wrap domain included (the solver leaves psi
  // unbounded; the diagnostic still reports against the table).
  MetricBounds mb;
  for (int p = 0; p < 2; ++p) {
    mb.x_lo[p] = rp.bounds.x_lo;
    mb.x_hi[p] = rp.bounds.x_hi;
    mb.u_lo[p] = rp.bounds.u_lo;
    mb.u_hi[p] = rp.bounds.u_hi;
  }
  return mb;
}

InfeasReport infeasibility_components(const GameSpec& game, const MetricBounds& mb,
                                      const Trajectory& Z1, const Trajectory& Z2, double eps) {
  InfeasReport r;
  const std::array<const Trajectory*, 2> Z{&Z1, &Z2};

  for (int p = 0; p < 2; ++p) {
    const Trajectory& t = *Z[p];
    for (int k = 0; k < game.N; ++k) {
      const Vec pred = game.dynamics(p, t.X[k], t.U[k], nullptr, nullptr);
      r.e_dyn = std::max(r.e_dyn, (t.X[k + 1] - pred).lpNorm<Eigen::Infinity>());
    }
  }

  if (game.n_ineq_rows > 0 && game.stage_ineq) {
    for (int k = 0; k <= game.N; ++k) {
      const Vec g = game.stage_ineq(0, k, Z1.X[k], Z2.X[k], nullptr, nullptr);
      for (int i = 0; i < g.size(); ++i) r.e_col = std::max(r.e_col, g[i]);
    }
  }
  r.e_col = std::max(r.e_col, 0.0);

  for (int p = 0; p < 2; ++p) {
    const Trajectory& t = *Z[p];
    for (int k = 0; k <= game.N; ++k)
      r.e_bnd = std::max(r.e_bnd, box_violation(t.X[k], mb.x_lo[p], mb.x_hi[p]));
    for (int k = 0; k < game.N; ++k)
      r.e_bnd = std::max(r.e_bnd, box_violation(t.U[k], mb.u_lo[p], mb.u_hi[p]));
  }

  r.s_infeas = std::max({r.e_dyn, r.e_col, r.e_bnd});
  r.e_dyn_excess = std::max(0.0, r.e_dyn - eps);
  r.e_col_excess = std::max(0.0, r.e_col - eps);
  r.e_bnd_excess = std::max(0.0, r.e_bnd - eps);
  r.s_infeas_excess = std::max(0.0, r.s_infeas - eps);
  return r;
}

double min_collision_margin(const Trajectory& Z1, const Trajectory& Z2,
                            const TrackParams& track, double d_safe) {
  double m = std::numeric_limits<double>::infinity();
  const int K = static_cast<int>(std::min(Z1.X.size(), Z2.X.size()));
  for (int k = 0; k < K; ++k) {
    const Eigen::Vector2d p1 = frenet_to_cartesian(Z1.X[k][FS_S], Z1.X[k][FS_T], track);
    const Eigen::Vector2d p2 = frenet_to_cartesian(Z2.X[k][FS_S], Z2.X[k][FS_T], track);
    m = std::min(m, (p1 - p2).norm() - d_safe);
  }
  return m;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  if (p <= 0.0) return values.front();
  if (p >= 1.0) return values.back();
  const double h = static_cast<double>(values.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

TrialResult run_trial(const TrialSpec& spec, const GameSpec& game, const MetricBounds& mb,
                      const TrackParams* track, double d_safe,
                      const BestResponseOperator* br) {
  TrialResult tr;
  tr.id = spec.id;
  tr.method = spec.method;

  // Shared warm start: zero inputs rolled out from the trial's initial
  // states, identical for every method.
  auto zero_guess = [&](int p) {
    Trajectory t;
    t.U.assign(game.N, Vec::Zero(game.nu[p]));
    t.X = rollout(game, p, game.x0[p], t.U);
    return t;
  };
  const Trajectory g1 = zero_guess(0);
  const Trajectory g2 = zero_guess(1);

  EquilibriumResult res;
  const auto t0 = std::chrono::steady_clock::now();
  switch (spec.method) {
    case Method::Reduced:
      if (!br) throw std::invalid_argument("run_trial: reduced method needs a BR operator");
      res = solve_reduced(game, *br, &g1, &g2, spec.opts);
      break;
    case Method::Ibr:
      res = solve_ibr(game, &g1, &g2, spec.opts);
      break;
    case Method::Joint:
      res = solve_joint_kkt(game, &g1, &g2, spec.opts);
      break;
  }
  const auto t1 = std::chrono::steady_clock::now();

  tr.status = res.status;
  tr.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
  tr.iterations = res.iterations;
  tr.J1 = res.J1;
  tr.J2 = res.J2;
  if (spec.method == Method::Reduced) tr.br_residual = res.br_residual_norm;
  tr.infeas = infeasibility_components(game, mb, res.Z1, res.Z2, spec.eps);
  if (track) tr.min_margin = min_collision_margin(res.Z1, res.Z2, *track, d_safe);
  if (spec.record_trajectories) {
    tr.Z1 = res.Z1;
    tr.Z2 = res.Z2;
  }
  return tr;
}

std::vector<TrialResult> run_monte_carlo(
    const MonteCarloConfig& cfg,
    const std::function<BestResponseOperator(const GameSpec&)>& br_factory) {
  if (cfg.n_trials < 1) throw std::invalid_argument("run_monte_carlo: n_trials must be >= 1");
  if (cfg.methods.empty()) throw std::invalid_argument("run_monte_carlo: no methods");
  const bool needs_br =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::Reduced) != cfg.methods.end();
  if (needs_br && !br_factory)
    throw std::invalid_argument("run_monte_carlo: reduced method needs a br_factory");

  const MetricBounds mb = MetricBounds::racing_table(cfg.rp);
  std::vector<std::vector<TrialResult>> slots(cfg.n_trials);

  parallel_for(static_cast<std::size_t>(cfg.n_trials), cfg.workers, [&](std::size_t k) {
    const std::uint64_t trial_seed = derive_seed(cfg.master_seed, k);
    std::vector<TrialResult>& out = slots[k];
    out.reserve(cfg.methods.size());
    try {
      const auto [x1, x2] = sample_initial_conditions(cfg.rp, trial_seed, cfg.sampler);
      const GameSpec game = make_racing_game(cfg.rp, x1, x2);
      std::optional<BestResponseOperator> br;
      if (needs_br) br = br_factory(game);
      for (const Method m : cfg.methods) {
        TrialSpec spec;
        spec.id = static_cast<int>(k);
        spec.seed = trial_seed;
        spec.x1_0 = x1;
        spec.x2_0 = x2;
        spec.method = m;
        spec.opts = cfg.opts;
        spec.record_trajectories = cfg.record_trajectories;
        spec.eps = cfg.eps;
        try {
          out.push_back(run_trial(spec, game, mb, &cfg.rp.track, cfg.rp.bounds.d_safe,
                                  br ? &*br : nullptr));
        } catch (const std::exception&) {
          TrialResult tr;
          tr.id = spec.id;
          tr.method = m;
          tr.status = SolveStatus::NumericalFailure;
          out.push_back(tr);
        }
      }
    } catch (const std::exception&) {
      // Sampler failure: every method records a failed trial for this id.
      for (const Method m : cfg.methods) {
        TrialResult tr;
        tr.id = static_cast<int>(k);
        tr.method = m;
        tr.status = SolveStatus::NumericalFailure;
        out.push_back(tr);
      }
    }
  });

  std::vector<TrialResult> results;
  results.reserve(static_cast<std::size_t>(cfg.n_trials) * cfg.methods.size());
  for (auto& s : slots)
    for (auto& tr : s) results.push_back(std::move(tr));
  return results;
}

SummaryStats summarize(const std::vector<TrialResult>& results, Method baseline) {
  if (results.empty()) throw std::invalid_argument("summarize: empty results");

  // Baseline J1 per trial id (success only), for the paired deltas.
  std::map<int, double> base_j1;
  for (const TrialResult& r : results)
    if (r.method == baseline && r.status == SolveStatus::Succeeded) base_j1[r.id] = r.J1;

  SummaryStats st;
  st.baseline = baseline;
  for (const Method m : {Method::Reduced, Method::Ibr, Method::Joint}) {
    std::vector<const TrialResult*> rows;
    for (const TrialResult& r : results)
      if (r.method == m) rows.push_back(&r);
    if (rows.empty()) continue;
    // Permutation invariance: aggregate in trial-id order.
    std::sort(rows.begin(), rows.end(),
              [](const TrialResult* a, const TrialResult* b) { return a->id < b->id; });

    MethodSummary ms;
    ms.method = m;
    ms.n_trials = static_cast<int>(rows.size());
    std::vector<double> times, iters, dj1, base_abs;
    int viol_success = 0, viol_all = 0;
    for (const TrialResult* r : rows) {
      const bool ok = r->status == SolveStatus::Succeeded;
      const bool viol = std::isfinite(r->min_margin) && r->min_margin < 0.0;
      if (viol) ++viol_all;
      if (ok) {
        ++ms.n_success;
        times.push_back(r->wall_time_s);
        iters.push_back(static_cast<double>(r->iterations));
        if (viol) ++viol_success;
        auto it = base_j1.find(r->id);
        if (it != base_j1.end()) {
          dj1.push_back(r->J1 - it->second);
          base_abs.push_back(std::abs(it->second));
        }
      } else if (r->status == SolveStatus::InfeasibleDetected) {
        ++ms.n_infeasible;
      } else if (r->status == SolveStatus::MaxIterExceeded) {
        ++ms.n_maxiter;
      } else {
        ++ms.n_numerical;
      }
    }
    ms.success_pct = 100.0 * ms.n_success / ms.n_trials;
    ms.median_time = percentile(times, 0.5);
    ms.p95_time = percentile(times, 0.95);
    ms.median_iterations = percentile(iters, 0.5);
    ms.p95_iterations = percentile(iters, 0.95);
    ms.coll_viol_pct_success =
        ms.n_success > 0 ? 100.0 * viol_success / ms.n_success : kNaN;
    ms.coll_viol_pct_all = 100.0 * viol_all / ms.n_trials;
    ms.n_paired = static_cast<int>(dj1.size());
    if (ms.n_paired > 0) {
      ms.dj1_median = percentile(dj1, 0.5);
      ms.dj1_p95 = percentile(dj1, 0.95);
      double sum = 0.0;
      for (double d : dj1) sum += d;
      ms.dj1_mean = sum / ms.n_paired;
      ms.baseline_abs_j1_median = percentile(base_abs, 0.5);
    }
    st.methods.push_back(std::move(ms));
  }
  return st;
}

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json traj_json(const Trajectory& t) {
  json j;
  json X = json::array(), U = json::array();
  for (const Vec& x : t.X) X.push_back(vec_json(x));
  for (const Vec& u : t.U) U.push_back(vec_json(u));
  j["X"] = X;
  j["U"] = U;
  return j;
}

Vec vec_of(const json& a) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
  return v;
}

Trajectory traj_of(const json& j) {
  Trajectory t;
  for (const json& x : j.at("X")) t.X.push_back(vec_of(x));
  for (const json& u : j.at("U")) t.U.push_back(vec_of(u));
  return t;
}

double num_or_nan(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return kNaN;
  return j.at(key).get<double>();
}

SolveStatus status_from_string(const std::string& s) {
  if (s == "succeeded") return SolveStatus::Succeeded;
  if (s == "infeasible_detected") return SolveStatus::InfeasibleDetected;
  if (s == "max_iter_exceeded") return SolveStatus::MaxIterExceeded;
  return SolveStatus::NumericalFailure;
}

std::string csv_num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_results_jsonl(const std::string& path, const std::vector<TrialResult>& results) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_results_jsonl: cannot open " + path);
  for (const TrialResult& r : results) {
    json j;
    j["id"] = r.id;
    j["method"] = to_string(r.method);
    j["status"] = to_string(r.status);
    j["time_s"] = r.wall_time_s;
    j["iterations"] = r.iterations;
    j["e_dyn"] = r.infeas.e_dyn;
    j["e_col"] = r.infeas.e_col;
    j["e_bnd"] = r.infeas.e_bnd;
    j["s_infeas"] = r.infeas.s_infeas;
    j["e_dyn_excess"] = r.infeas.e_dyn_excess;
    j["e_col_excess"] = r.infeas.e_col_excess;
    j["e_bnd_excess"] = r.infeas.e_bnd_excess;
    j["s_infeas_excess"] = r.infeas.s_infeas_excess;
    j["min_margin"] = r.min_margin;  // NaN serializes as null
    j["J1"] = r.J1;
    j["J2"] = r.J2;
    j["br_residual"] = r.br_residual;
    if (!r.Z1.X.empty() || !r.Z2.X.empty()) {
      j["Z1"] = traj_json(r.Z1);
      j["Z2"] = traj_json(r.Z2);
    }
    f << j.dump() << '\n';
  }
}

std::vector<TrialResult> read_results_jsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_results_jsonl: cannot open " + path);
  std::vector<TrialResult> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    TrialResult r;
    r.id = j.at("id").get<int>();
    const auto m = method_from_string(j.at("method").get<std::string>());
    if (!m) throw std::runtime_error("read_results_jsonl: unknown method");
    r.method = *m;
    r.status = status_from_string(j.at("status").get<std::string>());
    r.wall_time_s = num_or_nan(j, "time_s");
    r.iterations = j.at("iterations").get<int>();
    r.infeas.e_dyn = num_or_nan(j, "e_dyn");
    r.infeas.e_col = num_or_nan(j, "e_col");
    r.infeas.e_bnd = num_or_nan(j, "e_bnd");
    r.infeas.s_infeas = num_or_nan(j, "s_infeas");
    r.infeas.e_dyn_excess = num_or_nan(j, "e_dyn_excess");
    r.infeas.e_col_excess = num_or_nan(j, "e_col_excess");
    r.infeas.e_bnd_excess = num_or_nan(j, "e_bnd_excess");
    r.infeas.s_infeas_excess = num_or_nan(j, "s_infeas_excess");
    r.min_margin = num_or_nan(j, "min_margin");
    r.J1 = num_or_nan(j, "J1");
    r.J2 = num_or_nan(j, "J2");
    r.br_residual = num_or_nan(j, "br_residual");
    if (j.contains("Z1")) r.Z1 = traj_of(j.at("Z1"));
    if (j.contains("Z2")) r.Z2 = traj_of(j.at("Z2"));
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_csv(const std::string& path, const SummaryStats& stats) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_summary_csv: cannot open " + path);
  f << "method,n_trials,n_success,success_pct,median_time_s,p95_time_s,"
       "median_iters,p95_iters,coll_viol_pct_success,coll_viol_pct_all,"
       "n_infeasible,n_maxiter,n_numerical,n_paired,dj1_median,dj1_p95,"
       "dj1_mean,baseline_abs_j1_median,baseline\n";
  for (const MethodSummary& m : stats.methods) {
    f << to_string(m.method) << ',' << m.n_trials << ',' << m.n_success << ','
      << csv_num(m.success_pct) << ',' << csv_num(m.median_time) << ','
      << csv_num(m.p95_time) << ',' << csv_num(m.median_iterations) << ','
      << csv_num(m.p95_iterations) << ',' << csv_num(m.coll_viol_pct_success) << ','
      << csv_num(m.coll_viol_pct_all) << ',' << m.n_infeasible << ',' << m.n_maxiter << ','
      << m.n_numerical << ',' << m.n_paired << ',' << csv_num(m.dj1_median) << ','
      << csv_num(m.dj1_p95) << ',' << csv_num(m.dj1_mean) << ','
      << csv_num(m.baseline_abs_j1_median) << ',' << to_string(stats.baseline) << '\n';
  }
}

}  // namespace brnash

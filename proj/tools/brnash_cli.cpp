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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "brnash/config.hpp"
#include "brnash/frenet.hpp"
#include "brnash/harness.hpp"
#include "brnash/nlp.hpp"
#include "brnash/parallel.hpp"
#include "brnash/rng.hpp"
#include "brnash/surrogate.hpp"
#include "brnash/toy.hpp"

namespace fs = std::filesystem;
using namespace brnash;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  int workers = 0;
  bool single_thread = false;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-c,--config", a.config_path, "Run configuration file");
  cmd->add_option("-o,--out", a.out_override,
                  "Output directory (overrides config and BRNASH_OUT)");
  cmd->add_option("-w,--workers", a.workers, "Worker threads (0 = hardware)");
  cmd->add_flag("--single-thread", a.single_thread,
                "Force one worker (single-CPU timing protocol)");
}

RunConfig load_or_default(const CommonArgs& a) {
  RunConfig cfg;
  if (!a.config_path.empty()) cfg = load_config(a.config_path);
  if (!a.out_override.empty()) {
    cfg.out_dir = a.out_override;
  } else if (const char* env = std::getenv("BRNASH_OUT"); env && *env && a.config_path.empty()) {
    cfg.out_dir = env;
  } else if (const char* env2 = std::getenv("BRNASH_OUT"); env2 && *env2) {
    // Config present: env var still supplies the default when the config
    // leaves [output] dir at its built-in default.
    if (cfg.out_dir == "out") cfg.out_dir = env2;
  }
  if (a.single_thread) cfg.workers = 1;
  else if (a.workers > 0) cfg.workers = a.workers;
  return cfg;
}

int effective_workers(const RunConfig& cfg) {
  return cfg.workers > 0 ? cfg.workers : hardware_workers();
}

void echo_config(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  save_config((fs::path(cfg.out_dir) / "effective_config.cfg").string(), cfg);
}

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_meta(const fs::path& artifact, const std::string& stage, std::uint64_t hash) {
  nlohmann::json j;
  j["stage"] = stage;
  j["hash"] = hash_hex(hash);
  std::ofstream f(artifact.string() + ".meta.json", std::ios::binary);
  f << j.dump(2) << '\n';
}

bool meta_matches(const fs::path& artifact, std::uint64_t hash) {
  if (!fs::exists(artifact)) return false;
  std::ifstream f(artifact.string() + ".meta.json");
  if (!f) return false;
  try {
    nlohmann::json j;
    f >> j;
    return j.at("hash").get<std::string>() == hash_hex(hash);
  } catch (const std::exception&) {
    return false;
  }
}

GameSpec game_for(const RunConfig& cfg, const Vec& x1_0, const Vec& x2_0) {
  if (cfg.game_kind == "toy") {
    ToyGame t;
    if (x1_0.size() == 1 && x2_0.size() == 1) {
      t.x1 = x1_0[0];
      t.x2 = x2_0[0];
    }
    return make_toy_game(t);
  }
  return make_racing_game(cfg.to_racing_params(), x1_0, x2_0);
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

int cmd_selftest() {
  int failures = 0;
  auto check = [&failures](const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("%s  %s%s%s\n", ok ? "PASS" : "FAIL", name.c_str(),
                (!ok && !detail.empty()) ? "  -- " : "", (!ok && !detail.empty()) ? detail.c_str() : "");
    if (!ok) ++failures;
  };
  auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };

  const GameSpec toy = make_toy_game();
  const double v1_star = 1.0 / 3.0, v2_star = -1.0 / 3.0;

  // 1. Closed-form joint solve of the toy stationarity system.
  {
    const auto [v1, v2] = toy_joint_solve();
    check("toy-closed-form", near(v1, v1_star, 1e-12) && near(v2, v2_star, 1e-12));
  }
  // 2. Toy best-response map.
  {
    SolverOptions bopts;
    bopts.tol = 1e-10;
    const auto [b, o] = exact_br(toy, 1, toy_trajectory(toy, 0, 0.25).X, nullptr, bopts);
    check("toy-best-response",
          o.status == SolveStatus::Succeeded && near(b.U[0][0], toy_br2(0.25), 1e-8));
  }
  // 3-5. All three equilibrium solvers hit the toy solution.
  {
    EquilibriumOptions opts;
    opts.tol = 1e-10;
    auto br = make_exact_br_operator(toy, 1);
    const EquilibriumResult r = solve_reduced(toy, br, nullptr, nullptr, opts);
    check("toy-reduced", r.status == SolveStatus::Succeeded &&
                             near(r.Z1.U[0][0], v1_star, 1e-8) &&
                             near(r.Z2.U[0][0], v2_star, 1e-8));
  }
  {
    EquilibriumOptions opts;
    opts.tol = 1e-10;
    const EquilibriumResult r = solve_ibr(toy, nullptr, nullptr, opts);
    check("toy-ibr", r.status == SolveStatus::Succeeded && near(r.Z1.U[0][0], v1_star, 1e-8) &&
                         near(r.Z2.U[0][0], v2_star, 1e-8));
  }
  {
    EquilibriumOptions opts;
    opts.tol = 1e-10;
    const EquilibriumResult r = solve_joint_kkt(toy, nullptr, nullptr, opts);
    check("toy-joint-kkt", r.status == SolveStatus::Succeeded &&
                               near(r.Z1.U[0][0], v1_star, 1e-8) &&
                               near(r.Z2.U[0][0], v2_star, 1e-8));
  }
  // 6. Toy cost value at the equilibrium.
  {
    const Trajectory z1 = toy_trajectory(toy, 0, v1_star);
    const Trajectory z2 = toy_trajectory(toy, 1, v2_star);
    check("toy-cost-value", near(evaluate_cost(toy, 0, z1, z2), 11.0 / 36.0, 1e-12));
  }
  // 7. Kinematic slip-angle oracle.
  {
    const double delta = 25.0 * 3.14159265358979323846 / 180.0;
    check("slip-angle", near(slip_angle(delta, VehicleParams::benchmark()),
                             0.22906169065725077, 1e-15));
  }
  // 8. One Euler step oracle.
  {
    const Eigen::Vector4d x(1.0, 0.0, 0.0, 0.0);
    const Eigen::Vector2d u(0.0, 0.0);
    const Eigen::Vector4d xn =
        euler_step(x, u, 0.05, TrackParams::benchmark(), VehicleParams::benchmark());
    check("euler-step", near(xn[0], 1.0, 1e-15) &&
                            near(xn[1], -0.01428571428571429, 1e-15) &&
                            near(xn[2], 0.05, 1e-15) && near(xn[3], 0.0, 1e-15));
  }
  // 9. Track-to-plane Jacobian against finite differences.
  {
    Mat J;
    const double s = 1.3, t = 0.21, h = 1e-6;
    frenet_to_cartesian(s, t, TrackParams::benchmark(), &J);
    const Eigen::Vector2d ds = (frenet_to_cartesian(s + h, t, TrackParams::benchmark()) -
                                frenet_to_cartesian(s - h, t, TrackParams::benchmark())) /
                               (2 * h);
    const Eigen::Vector2d dt = (frenet_to_cartesian(s, t + h, TrackParams::benchmark()) -
                                frenet_to_cartesian(s, t - h, TrackParams::benchmark())) /
                               (2 * h);
    check("frenet-jacobian", (J.col(0) - ds).norm() < 1e-6 && (J.col(1) - dt).norm() < 1e-6);
  }
  // 10. Collision margins at coincident positions.
  {
    const Eigen::Vector4d x(1.0, 0.0, 1.0, 0.1);
    const auto [md, ms] = collision_margin(x, x, TrackParams::benchmark(), Bounds::benchmark());
    check("collision-margin", near(md, -0.25, 1e-15) && near(ms, -0.0625, 1e-15));
  }
  // 11. Order statistics with interpolation.
  {
    check("percentile", near(percentile({0.1, 0.2, 0.3, 10.0}, 0.5), 0.25, 1e-12) &&
                            near(percentile({0.1, 0.2, 0.3, 10.0}, 0.95), 8.545, 1e-12));
  }
  // 12. Equality-constrained quadratic program.
  {
    NLPProblem qp;
    qp.n = 2;
    qp.p = 1;
    qp.objective = [](const Vec& x, Vec* g) {
      if (g) *g = 2.0 * x;
      return x.squaredNorm();
    };
    qp.eq = [](const Vec& x, Vec* val, Mat* J) {
      if (val) {
        val->resize(1);
        (*val)[0] = x[0] + x[1] - 1.0;
      }
      if (J) {
        J->resize(1, 2);
        (*J) << 1.0, 1.0;
      }
    };
    qp.lb = Vec::Constant(2, -kInfBound);
    qp.ub = Vec::Constant(2, kInfBound);
    SolverOptions qp_opts;
    qp_opts.tol = 1e-9;  // the 1e-8 accuracy below needs a tighter KKT target
    const SolveOutcome out = solve_nlp(qp, Vec::Zero(2), qp_opts);
    check("nlp-equality-qp", out.status == SolveStatus::Succeeded &&
                                 near(out.x[0], 0.5, 1e-8) && near(out.x[1], 0.5, 1e-8));
  }
  // 13. Network outputs always land strictly inside the input box.
  {
    const RacingParams rp;
    Vec z = Vec::Zero(4);
    Vec z2 = Vec::Zero(4);
    z2[FS_T] = 0.3;
    const GameSpec game = make_racing_game(rp, z, z2);
    const SurrogateParams p = init_surrogate(game, 1, {8, 8}, 7);
    Rng rng(99);
    bool ok = true;
    std::vector<Vec> X1(game.N + 1, z);
    for (int trial = 0; trial < 100 && ok; ++trial) {
      Vec x2 = Vec::Zero(4);
      x2[FS_V] = rng.uniform(0.0, 2.0);
      x2[FS_T] = rng.uniform(-0.5, 0.5);
      const Trajectory t = surrogate_rollout(p, game, x2, X1);
      for (int k = 0; k < game.N && ok; ++k)
        for (int d = 0; d < 2; ++d)
          ok = ok && t.U[k][d] > game.u_lo[1][d] && t.U[k][d] < game.u_hi[1][d];
    }
    check("surrogate-input-box", ok);
  }
  // 14. Surrogate rollouts have exactly zero dynamics defect.
  {
    const RacingParams rp;
    Vec z = Vec::Zero(4);
    Vec z2 = Vec::Zero(4);
    z2[FS_T] = 0.2;
    const GameSpec game = make_racing_game(rp, z, z2);
    const SurrogateParams p = init_surrogate(game, 1, {8, 8}, 3);
    std::vector<Vec> X1(game.N + 1, z);
    const Trajectory t = surrogate_rollout(p, game, z2, X1);
    double defect = 0.0;
    for (int k = 0; k < game.N; ++k)
      defect = std::max(defect, (t.X[k + 1] - game.dynamics(1, t.X[k], t.U[k], nullptr, nullptr))
                                    .lpNorm<Eigen::Infinity>());
    check("surrogate-rollout-defect", defect == 0.0);
  }

  std::printf("%d check(s) failed\n", failures);
  return failures == 0 ? kExitOk : kExitFail;
}

// ---------------------------------------------------------------------------
// pipeline stages
// ---------------------------------------------------------------------------

int cmd_generate_dataset(const RunConfig& cfg) {
  echo_config(cfg);
  const fs::path out = fs::path(cfg.out_dir) / "dataset.jsonl";
  DatasetGenReport rep;
  const std::vector<BRSample> data = generate_dataset(
      cfg.to_racing_params(), cfg.n_samples, cfg.dataset_seed, effective_workers(cfg), &rep);
  save_dataset(out.string(), data);
  write_meta(out, "dataset", stage_hash(cfg, "dataset"));
  std::printf("dataset: %d samples (%d attempts, %d discarded) -> %s\n", rep.n_samples,
              rep.n_attempts, rep.n_discarded, out.string().c_str());
  return kExitOk;
}

int cmd_train(const RunConfig& cfg) {
  echo_config(cfg);
  const fs::path dataset = fs::path(cfg.out_dir) / "dataset.jsonl";
  if (!fs::exists(dataset)) {
    std::fprintf(stderr, "train: dataset not found at %s (run generate-dataset first)\n",
                 dataset.string().c_str());
    return kExitUsage;
  }
  const std::vector<BRSample> data = load_dataset(dataset.string());
  const RacingParams rp = cfg.to_racing_params();
  const GameSpec game = make_racing_game(rp, Vec::Zero(4), Vec::Zero(4));
  const TrainResult tr = train(data, game, cfg.training);
  const fs::path out = fs::path(cfg.out_dir) / "surrogate.bin";
  save_surrogate(out.string(), tr.params);
  write_meta(out, "train", stage_hash(cfg, "train"));
  std::printf("train: %zu samples, %d epochs, best epoch %d (val %.6g), %.1f s -> %s\n",
              data.size(), cfg.training.epochs, tr.best_epoch, tr.best_val, tr.wall_time_s,
              out.string().c_str());
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg) {
  echo_config(cfg);
  const fs::path dataset = fs::path(cfg.out_dir) / "dataset.jsonl";
  const fs::path weights = fs::path(cfg.out_dir) / "surrogate.bin";
  if (!fs::exists(dataset)) {
    std::fprintf(stderr, "validate: dataset not found at %s\n", dataset.string().c_str());
    return kExitUsage;
  }
  if (!fs::exists(weights)) {
    std::fprintf(stderr, "validate: surrogate not found at %s (run train first)\n",
                 weights.string().c_str());
    return kExitUsage;
  }
  const std::vector<BRSample> data = load_dataset(dataset.string());
  const SurrogateParams params = load_surrogate(weights.string());
  const RacingParams rp = cfg.to_racing_params();
  const GameSpec game = make_racing_game(rp, Vec::Zero(4), Vec::Zero(4));
  const auto [train_set, val_set] = split_dataset(data, cfg.training);
  const std::vector<BRSample>& eval_set = val_set.empty() ? data : val_set;
  const ValidationMetrics vm = validation_metrics(params, game, eval_set, rp.track,
                                                  rp.bounds.d_safe, effective_workers(cfg));
  std::printf("validate: %d held-out samples\n", vm.n_samples);
  std::printf("  rmse a       %.6f m/s^2\n", vm.rmse_a);
  std::printf("  rmse delta   %.6f rad\n", vm.rmse_delta);
  std::printf("  rmse v       %.6f m/s\n", vm.rmse_v);
  std::printf("  rmse psi     %.6f rad\n", vm.rmse_psi);
  std::printf("  rmse s       %.6f m\n", vm.rmse_s);
  std::printf("  rmse t       %.6f m\n", vm.rmse_t);
  std::printf("  rmse pos     %.6f m\n", vm.rmse_pos);
  std::printf("  max col viol %.6g\n", vm.max_col_violation);
  const fs::path out = fs::path(cfg.out_dir) / "validation.json";
  {
    nlohmann::json j;
    j["n_samples"] = vm.n_samples;
    j["rmse_a"] = vm.rmse_a;
    j["rmse_delta"] = vm.rmse_delta;
    j["rmse_v"] = vm.rmse_v;
    j["rmse_psi"] = vm.rmse_psi;
    j["rmse_s"] = vm.rmse_s;
    j["rmse_t"] = vm.rmse_t;
    j["rmse_pos"] = vm.rmse_pos;
    j["max_col_violation"] = vm.max_col_violation;
    std::ofstream f(out, std::ios::binary);
    f << j.dump(2) << '\n';
  }
  write_meta(out, "validate", stage_hash(cfg, "validate"));
  return kExitOk;
}

std::optional<Vec> parse_state(const std::string& csv) {
  if (csv.empty()) return std::nullopt;
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) vals.push_back(std::stod(item));
  Vec v(static_cast<int>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<int>(i)] = vals[i];
  return v;
}

int cmd_solve(const RunConfig& cfg, const std::string& method_str, std::uint64_t seed,
              const std::string& x1_csv, const std::string& x2_csv,
              const std::string& surrogate_path) {
  const auto method = method_from_string(method_str);
  if (!method) {
    std::fprintf(stderr, "solve: unknown method '%s' (reduced|ibr|joint)\n", method_str.c_str());
    return kExitUsage;
  }
  echo_config(cfg);

  Vec x1, x2;
  const bool toy = cfg.game_kind == "toy";
  if (toy) {
    x1 = Vec::Zero(1);
    x2 = Vec::Zero(1);
  } else {
    const RacingParams rp = cfg.to_racing_params();
    const auto ex1 = parse_state(x1_csv), ex2 = parse_state(x2_csv);
    if (ex1.has_value() != ex2.has_value()) {
      std::fprintf(stderr, "solve: provide both --x1 and --x2 or neither\n");
      return kExitUsage;
    }
    if (ex1) {
      if (ex1->size() != 4 || ex2->size() != 4) {
        std::fprintf(stderr, "solve: explicit states need 4 components v,psi,s,t\n");
        return kExitUsage;
      }
      x1 = *ex1;
      x2 = *ex2;
      const double prox = (frenet_to_cartesian(x1[FS_S], x1[FS_T], rp.track) -
                           frenet_to_cartesian(x2[FS_S], x2[FS_T], rp.track))
                              .norm();
      if (prox > cfg.prox_max || prox < rp.bounds.d_safe)
        std::fprintf(stderr,
                     "solve: warning: explicit initial pair is outside the sampler's window "
                     "(separation %.4f m, window [%.4f, %.4f]); solving anyway\n",
                     prox, rp.bounds.d_safe, cfg.prox_max);
    } else {
      SamplerOptions so;
      so.prox_max = cfg.prox_max;
      std::tie(x1, x2) = sample_initial_conditions(rp, seed, so);
    }
  }

  const GameSpec game = game_for(cfg, x1, x2);

  std::optional<BestResponseOperator> br;
  if (*method == Method::Reduced) {
    if (toy) {
      br = make_exact_br_operator(game, 1, cfg.to_equilibrium_options().br);
    } else {
      const fs::path weights =
          surrogate_path.empty() ? fs::path(cfg.out_dir) / "surrogate.bin" : fs::path(surrogate_path);
      if (!fs::exists(weights)) {
        std::fprintf(stderr,
                     "solve: reduced method needs trained parameters; expected file %s "
                     "(run train, or pass --surrogate)\n",
                     weights.string().c_str());
        return kExitUsage;
      }
      br = make_learned_br_operator(game, load_surrogate(weights.string()));
    }
  }

  TrialSpec spec;
  spec.id = 0;
  spec.seed = seed;
  spec.x1_0 = x1;
  spec.x2_0 = x2;
  spec.method = *method;
  spec.opts = cfg.to_equilibrium_options();
  spec.record_trajectories = true;
  spec.eps = cfg.eps;

  const MetricBounds mb =
      toy ? MetricBounds::from_game(game) : MetricBounds::racing_table(cfg.to_racing_params());
  const RacingParams rp = cfg.to_racing_params();
  const TrialResult tr = run_trial(spec, game, mb, toy ? nullptr : &rp.track,
                                   rp.bounds.d_safe, br ? &*br : nullptr);

  std::printf("status      %s\n", to_string(tr.status));
  std::printf("time        %.3f s\n", tr.wall_time_s);
  std::printf("iterations  %d\n", tr.iterations);
  std::printf("J1          %.8g\n", tr.J1);
  std::printf("J2          %.8g\n", tr.J2);
  std::printf("s_infeas    %.3g\n", tr.infeas.s_infeas);
  if (std::isfinite(tr.min_margin)) std::printf("margin      %.6f m\n", tr.min_margin);
  if (std::isfinite(tr.br_residual)) std::printf("br_residual %.3g\n", tr.br_residual);
  if (toy) {
    std::printf("decisions   v1 = %.9f, v2 = %.9f\n", tr.Z1.U[0][0], tr.Z2.U[0][0]);
  }

  const fs::path out = fs::path(cfg.out_dir) / "solve_result.jsonl";
  write_results_jsonl(out.string(), {tr});
  std::printf("result -> %s\n", out.string().c_str());
  return tr.status == SolveStatus::Succeeded ? kExitOk : kExitFail;
}

int cmd_montecarlo(const RunConfig& cfg) {
  echo_config(cfg);
  MonteCarloConfig mc = cfg.to_monte_carlo_config();
  mc.workers = effective_workers(cfg);

  std::function<BestResponseOperator(const GameSpec&)> factory;
  const bool needs_br =
      std::find(mc.methods.begin(), mc.methods.end(), Method::Reduced) != mc.methods.end();
  if (needs_br) {
    const fs::path weights = fs::path(cfg.out_dir) / "surrogate.bin";
    if (!fs::exists(weights)) {
      std::fprintf(stderr,
                   "montecarlo: reduced method needs trained parameters; expected file %s\n",
                   weights.string().c_str());
      return kExitUsage;
    }
    const SurrogateParams params = load_surrogate(weights.string());
    factory = [params](const GameSpec& g) { return make_learned_br_operator(g, params); };
  }

  const std::vector<TrialResult> results = run_monte_carlo(mc, factory);
  const fs::path res_path = fs::path(cfg.out_dir) / "results.jsonl";
  write_results_jsonl(res_path.string(), results);
  const SummaryStats stats = summarize(results, cfg.baseline);
  const fs::path csv_path = fs::path(cfg.out_dir) / "summary.csv";
  write_summary_csv(csv_path.string(), stats);
  write_meta(res_path, "montecarlo", stage_hash(cfg, "montecarlo"));

  std::printf("%-8s %8s %8s %12s %12s %10s %10s\n", "method", "trials", "succ%", "med time",
              "p95 time", "med dJ1", "coll%");
  for (const MethodSummary& m : stats.methods) {
    std::printf("%-8s %8d %7.1f%% %11.3fs %11.3fs %10.4g %9.1f%%\n", to_string(m.method),
                m.n_trials, m.success_pct, m.median_time, m.p95_time, m.dj1_median,
                m.coll_viol_pct_all);
  }
  std::printf("results -> %s\nsummary -> %s\n", res_path.string().c_str(),
              csv_path.string().c_str());
  return kExitOk;
}

int cmd_report(const RunConfig& cfg) {
  echo_config(cfg);
  const fs::path res_path = fs::path(cfg.out_dir) / "results.jsonl";
  if (!fs::exists(res_path)) {
    std::fprintf(stderr, "report: results not found at %s (run montecarlo first)\n",
                 res_path.string().c_str());
    return kExitUsage;
  }
  const std::vector<TrialResult> results = read_results_jsonl(res_path.string());
  const fs::path report_dir = fs::path(cfg.out_dir) / "report";
  write_report_files(report_dir.string(), results, cfg.baseline);
  write_meta(report_dir / "report.done", "report", stage_hash(cfg, "report"));
  {
    std::ofstream f(report_dir / "report.done");
    f << "ok\n";
  }
  std::printf("report files -> %s\n", report_dir.string().c_str());
  return kExitOk;
}

int cmd_pipeline(const RunConfig& cfg) {
  echo_config(cfg);
  struct Stage {
    const char* name;
    fs::path artifact;
    std::function<int()> run;
  };
  const fs::path out(cfg.out_dir);
  const std::vector<Stage> stages = {
      {"dataset", out / "dataset.jsonl", [&] { return cmd_generate_dataset(cfg); }},
      {"train", out / "surrogate.bin", [&] { return cmd_train(cfg); }},
      {"validate", out / "validation.json", [&] { return cmd_validate(cfg); }},
      {"montecarlo", out / "results.jsonl", [&] { return cmd_montecarlo(cfg); }},
      {"report", out / "report" / "report.done", [&] { return cmd_report(cfg); }},
  };
  for (const Stage& s : stages) {
    const std::uint64_t h = stage_hash(cfg, s.name);
    if (meta_matches(s.artifact, h)) {
      std::printf("pipeline: stage %s skipped (hash match on %s)\n", s.name,
                  s.artifact.string().c_str());
      continue;
    }
    std::printf("pipeline: stage %s\n", s.name);
    const int rc = s.run();
    if (rc != kExitOk) {
      std::fprintf(stderr, "pipeline: stage %s failed (artifact %s)\n", s.name,
                   s.artifact.string().c_str());
      return rc;
    }
  }
  std::printf("pipeline: done\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local equilibrium solvers for two-player dynamic games"};
  app.require_subcommand(1);

  CommonArgs a_selftest, a_gen, a_train, a_val, a_solve, a_mc, a_report, a_pipe;

  CLI::App* c_selftest = app.add_subcommand("selftest", "Run built-in sanity checks");
  add_common(c_selftest, a_selftest);

  CLI::App* c_gen =
      app.add_subcommand("generate-dataset", "Sample best-response training data");
  add_common(c_gen, a_gen);

  CLI::App* c_train = app.add_subcommand("train", "Train the best-response network");
  add_common(c_train, a_train);

  CLI::App* c_val = app.add_subcommand("validate", "Score the network on held-out data");
  add_common(c_val, a_val);

  CLI::App* c_solve = app.add_subcommand("solve", "Solve one game instance");
  add_common(c_solve, a_solve);
  std::string method_str = "joint", x1_csv, x2_csv, surrogate_path;
  std::uint64_t solve_seed = 0;
  c_solve->add_option("-m,--method", method_str, "reduced | ibr | joint");
  c_solve->add_option("-s,--seed", solve_seed, "Initial-condition sampler seed");
  c_solve->add_option("--x1", x1_csv, "Explicit initial state v,psi,s,t (bypasses sampler)");
  c_solve->add_option("--x2", x2_csv, "Explicit initial state v,psi,s,t (bypasses sampler)");
  c_solve->add_option("--surrogate", surrogate_path, "Trained parameter file");

  CLI::App* c_mc = app.add_subcommand("montecarlo", "Run the paired benchmark campaign");
  add_common(c_mc, a_mc);
  int mc_trials = 0;
  c_mc->add_option("-n,--trials", mc_trials, "Trial count override");

  CLI::App* c_report = app.add_subcommand("report", "Emit plot-ready data files");
  add_common(c_report, a_report);

  CLI::App* c_pipe = app.add_subcommand("pipeline", "dataset -> train -> validate -> mc -> report");
  add_common(c_pipe, a_pipe);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_selftest->parsed()) return cmd_selftest();
    if (c_gen->parsed()) return cmd_generate_dataset(load_or_default(a_gen));
    if (c_train->parsed()) return cmd_train(load_or_default(a_train));
    if (c_val->parsed()) return cmd_validate(load_or_default(a_val));
    if (c_solve->parsed())
      return cmd_solve(load_or_default(a_solve), method_str, solve_seed, x1_csv, x2_csv,
                       surrogate_path);
    if (c_mc->parsed()) {
      RunConfig cfg = load_or_default(a_mc);
      if (mc_trials > 0) cfg.n_trials = mc_trials;
      return cmd_montecarlo(cfg);
    }
    if (c_report->parsed()) return cmd_report(load_or_default(a_report));
    if (c_pipe->parsed()) return cmd_pipeline(load_or_default(a_pipe));
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFail;
  }
  return kExitUsage;
}

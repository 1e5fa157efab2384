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

#include "brnash/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "brnash/parallel.hpp"

namespace brnash {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& where, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for " + where + ": '" + v + "'");
  }
}

long long parse_int(const std::string& where, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for " + where + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& where, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean for " + where + ": '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void apply_key(RunConfig& c, const std::string& sec, const std::string& key,
               const std::string& val) {
  const std::string where = sec + "." + key;
  auto d = [&] { return parse_double(where, val); };
  auto i = [&] { return static_cast<int>(parse_int(where, val)); };
  auto u = [&] { return static_cast<std::uint64_t>(parse_int(where, val)); };
  auto b = [&] { return parse_bool(where, val); };

  if (sec == "game") {
    if (key == "kind") {
      if (val != "racing" && val != "toy")
        throw ConfigError("config: game.kind must be racing or toy, got '" + val + "'");
      c.game_kind = val;
    } else if (key == "track_radius") c.track_radius = d();
    else if (key == "wheel_lf") c.wheel_lf = d();
    else if (key == "wheel_lr") c.wheel_lr = d();
    else if (key == "horizon") c.horizon = i();
    else if (key == "dt") c.dt = d();
    else if (key == "v_min") c.v_min = d();
    else if (key == "v_max") c.v_max = d();
    else if (key == "half_width") c.half_width = d();
    else if (key == "a_max") c.a_max = d();
    else if (key == "delta_max_deg") c.delta_max_deg = d();
    else if (key == "d_safe") c.d_safe = d();
    else if (key == "r_u") c.r_u = d();
    else if (key == "p_du") c.p_du = d();
    else if (key == "q_v") c.q_v = d();
    else if (key == "q11") c.q11 = d();
    else if (key == "q12") c.q12 = d();
    else if (key == "q21") c.q21 = d();
    else if (key == "q22") c.q22 = d();
    else throw ConfigError("config: unknown key " + where);
  } else if (sec == "solver") {
    if (key == "tol") c.tol = d();
    else if (key == "max_outer") c.max_outer = i();
    else if (key == "max_inner") c.max_inner = i();
    else if (key == "rho0") c.rho0 = d();
    else if (key == "rho_growth") c.rho_growth = d();
    else if (key == "rho_cap") c.rho_cap = d();
    else if (key == "eq_tol") c.eq_tol = d();
    else if (key == "eq_max_iterations") c.eq_max_iterations = i();
    else if (key == "br_solve_tol") c.br_solve_tol = d();
    else if (key == "br_fd_step") c.br_fd_step = d();
    else if (key == "br_jacobian_refresh") c.br_jacobian_refresh = d();
    else throw ConfigError("config: unknown key " + where);
  } else if (sec == "dataset") {
    if (key == "n_samples") c.n_samples = i();
    else if (key == "seed") c.dataset_seed = u();
    else throw ConfigError("config: unknown key " + where);
  } else if (sec == "training") {
    if (key == "learning_rate") c.training.lr = d();
    else if (key == "weight_decay") c.training.weight_decay = d();
    else if (key == "batch_size") c.training.batch_size = i();
    else if (key == "epochs") c.training.epochs = i();
    else if (key == "grad_clip") c.training.grad_clip = d();
    else if (key == "gamma") c.training.gamma = d();
    else if (key == "lambda_u") c.training.lambda_u = d();
    else if (key == "lambda_x") c.training.lambda_x = d();
    else if (key == "lambda_g") c.training.lambda_g = d();
    else if (key == "val_frac") c.training.val_frac = d();
    else if (key == "seed") c.training.seed = u();
    else if (key == "verbose") c.training.verbose = b();
    else if (key == "hidden") {
      std::vector<int> widths;
      for (const std::string& w : split_list(val))
        widths.push_back(static_cast<int>(parse_int(where, w)));
      if (widths.empty()) throw ConfigError("config: training.hidden must be nonempty");
      c.training.hidden_widths = widths;
    } else throw ConfigError("config: unknown key " + where);
  } else if (sec == "montecarlo") {
    if (key == "n_trials") c.n_trials = i();
    else if (key == "methods") {
      std::vector<Method> ms;
      for (const std::string& name : split_list(val)) {
        const auto m = method_from_string(name);
        if (!m) throw ConfigError("config: unknown method '" + name + "' in " + where);
        ms.push_back(*m);
      }
      if (ms.empty()) throw ConfigError("config: montecarlo.methods must be nonempty");
      c.methods = ms;
    } else if (key == "master_seed") c.master_seed = u();
    else if (key == "workers") c.workers = i();
    else if (key == "eps") c.eps = d();
    else if (key == "prox_max") c.prox_max = d();
    else if (key == "record_trajectories") c.record_trajectories = b();
    else if (key == "baseline") {
      const auto m = method_from_string(val);
      if (!m) throw ConfigError("config: unknown method '" + val + "' for " + where);
      c.baseline = *m;
    } else throw ConfigError("config: unknown key " + where);
  } else if (sec == "output") {
    if (key == "dir") c.out_dir = val;
    else throw ConfigError("config: unknown key " + where);
  } else {
    throw ConfigError("config: unknown section [" + sec + "]");
  }
}

void validate(const RunConfig& c) {
  if (c.horizon < 1) throw ConfigError("config: game.horizon must be >= 1");
  if (!(c.dt > 0)) throw ConfigError("config: game.dt must be > 0");
  if (!(c.tol > 0)) throw ConfigError("config: solver.tol must be > 0");
  if (c.n_samples < 1) throw ConfigError("config: dataset.n_samples must be >= 1");
  if (c.n_trials < 1) throw ConfigError("config: montecarlo.n_trials must be >= 1");
  if (!(c.training.val_frac >= 0.0 && c.training.val_frac < 1.0))
    throw ConfigError("config: training.val_frac must be in [0, 1)");
  if (c.training.batch_size < 1) throw ConfigError("config: training.batch_size must be >= 1");
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  RunConfig c;
  std::string line, sec;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: malformed section at line " + std::to_string(lineno));
      sec = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (sec.empty())
      throw ConfigError("config: key outside any section at line " + std::to_string(lineno));
    apply_key(c, sec, key, val);
  }
  validate(c);
  return c;
}

namespace {

std::string serialize_section(const RunConfig& c, const std::string& sec) {
  std::ostringstream o;
  o << "[" << sec << "]\n";
  if (sec == "game") {
    o << "kind = " << c.game_kind << "\n";
    o << "track_radius = " << fmt_double(c.track_radius) << "\n";
    o << "wheel_lf = " << fmt_double(c.wheel_lf) << "\n";
    o << "wheel_lr = " << fmt_double(c.wheel_lr) << "\n";
    o << "horizon = " << c.horizon << "\n";
    o << "dt = " << fmt_double(c.dt) << "\n";
    o << "v_min = " << fmt_double(c.v_min) << "\n";
    o << "v_max = " << fmt_double(c.v_max) << "\n";
    o << "half_width = " << fmt_double(c.half_width) << "\n";
    o << "a_max = " << fmt_double(c.a_max) << "\n";
    o << "delta_max_deg = " << fmt_double(c.delta_max_deg) << "\n";
    o << "d_safe = " << fmt_double(c.d_safe) << "\n";
    o << "r_u = " << fmt_double(c.r_u) << "\n";
    o << "p_du = " << fmt_double(c.p_du) << "\n";
    o << "q_v = " << fmt_double(c.q_v) << "\n";
    o << "q11 = " << fmt_double(c.q11) << "\n";
    o << "q12 = " << fmt_double(c.q12) << "\n";
    o << "q21 = " << fmt_double(c.q21) << "\n";
    o << "q22 = " << fmt_double(c.q22) << "\n";
  } else if (sec == "solver") {
    o << "tol = " << fmt_double(c.tol) << "\n";
    o << "max_outer = " << c.max_outer << "\n";
    o << "max_inner = " << c.max_inner << "\n";
    o << "rho0 = " << fmt_double(c.rho0) << "\n";
    o << "rho_growth = " << fmt_double(c.rho_growth) << "\n";
    o << "rho_cap = " << fmt_double(c.rho_cap) << "\n";
    o << "eq_tol = " << fmt_double(c.eq_tol) << "\n";
    o << "eq_max_iterations = " << c.eq_max_iterations << "\n";
    o << "br_solve_tol = " << fmt_double(c.br_solve_tol) << "\n";
    o << "br_fd_step = " << fmt_double(c.br_fd_step) << "\n";
    o << "br_jacobian_refresh = " << fmt_double(c.br_jacobian_refresh) << "\n";
  } else if (sec == "dataset") {
    o << "n_samples = " << c.n_samples << "\n";
    o << "seed = " << c.dataset_seed << "\n";
  } else if (sec == "training") {
    o << "learning_rate = " << fmt_double(c.training.lr) << "\n";
    o << "weight_decay = " << fmt_double(c.training.weight_decay) << "\n";
    o << "batch_size = " << c.training.batch_size << "\n";
    o << "epochs = " << c.training.epochs << "\n";
    o << "grad_clip = " << fmt_double(c.training.grad_clip) << "\n";
    o << "gamma = " << fmt_double(c.training.gamma) << "\n";
    o << "lambda_u = " << fmt_double(c.training.lambda_u) << "\n";
    o << "lambda_x = " << fmt_double(c.training.lambda_x) << "\n";
    o << "lambda_g = " << fmt_double(c.training.lambda_g) << "\n";
    o << "val_frac = " << fmt_double(c.training.val_frac) << "\n";
    o << "seed = " << c.training.seed << "\n";
    o << "verbose = " << (c.training.verbose ? "true" : "false") << "\n";
    o << "hidden = ";
    for (std::size_t i = 0; i < c.training.hidden_widths.size(); ++i) {
      if (i) o << ",";
      o << c.training.hidden_widths[i];
    }
    o << "\n";
  } else if (sec == "montecarlo") {
    o << "n_trials = " << c.n_trials << "\n";
    o << "methods = ";
    for (std::size_t i = 0; i < c.methods.size(); ++i) {
      if (i) o << ",";
      o << to_string(c.methods[i]);
    }
    o << "\n";
    o << "master_seed = " << c.master_seed << "\n";
    o << "workers = " << c.workers << "\n";
    o << "eps = " << fmt_double(c.eps) << "\n";
    o << "prox_max = " << fmt_double(c.prox_max) << "\n";
    o << "record_trajectories = " << (c.record_trajectories ? "true" : "false") << "\n";
    o << "baseline = " << to_string(c.baseline) << "\n";
  } else if (sec == "output") {
    o << "dir = " << c.out_dir << "\n";
  }
  return o.str();
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) {
  std::string s;
  for (const char* sec : {"game", "solver", "dataset", "training", "montecarlo", "output"}) {
    s += serialize_section(cfg, sec);
    s += "\n";
  }
  return s;
}

void save_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_config: cannot open " + path);
  f << serialize_config(cfg);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t stage_hash(const RunConfig& cfg, const std::string& stage) {
  auto hex = [](std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
  };
  const std::uint64_t h_dataset =
      fnv1a(serialize_section(cfg, "game") + serialize_section(cfg, "dataset"));
  if (stage == "dataset") return h_dataset;
  const std::uint64_t h_train = fnv1a(hex(h_dataset) + serialize_section(cfg, "training"));
  if (stage == "train") return h_train;
  if (stage == "validate") return fnv1a(hex(h_train) + "validate");
  const std::uint64_t h_mc = fnv1a(hex(h_train) + serialize_section(cfg, "solver") +
                                   serialize_section(cfg, "montecarlo"));
  if (stage == "montecarlo") return h_mc;
  if (stage == "report") return fnv1a(hex(h_mc) + "report");
  throw std::invalid_argument("stage_hash: unknown stage " + stage);
}

RacingParams RunConfig::to_racing_params() const {
  RacingParams rp;
  rp.track.R = track_radius;
  rp.track.kappa = 1.0 / track_radius;
  rp.track.s_max = track_radius * (kPi / 2.0);
  rp.vehicle.lf = wheel_lf;
  rp.vehicle.lr = wheel_lr;
  rp.N = horizon;
  rp.dt = dt;
  rp.bounds = Bounds::benchmark();
  rp.bounds.x_lo[FS_V] = v_min;
  rp.bounds.x_hi[FS_V] = v_max;
  rp.bounds.x_lo[FS_S] = 0.0;
  rp.bounds.x_hi[FS_S] = rp.track.s_max;
  rp.bounds.x_lo[FS_T] = -half_width;
  rp.bounds.x_hi[FS_T] = half_width;
  rp.bounds.u_lo[FU_A] = -a_max;
  rp.bounds.u_hi[FU_A] = a_max;
  rp.bounds.u_lo[FU_DELTA] = -delta_max_deg * kPi / 180.0;
  rp.bounds.u_hi[FU_DELTA] = delta_max_deg * kPi / 180.0;
  rp.bounds.d_safe = d_safe;
  rp.r_u = r_u;
  rp.p_du = p_du;
  rp.q_v = q_v;
  rp.q11 = q11;
  rp.q12 = q12;
  rp.q21 = q21;
  rp.q22 = q22;
  return rp;
}

SolverOptions RunConfig::to_solver_options() const {
  SolverOptions s;
  s.tol = tol;
  s.max_outer = max_outer;
  s.max_inner = max_inner;
  s.rho0 = rho0;
  s.rho_growth = rho_growth;
  s.rho_cap = rho_cap;
  return s;
}

EquilibriumOptions RunConfig::to_equilibrium_options() const {
  EquilibriumOptions e;
  e.tol = eq_tol;
  e.max_iterations = eq_max_iterations;
  e.solver = to_solver_options();
  e.br.solve_tol = br_solve_tol;
  e.br.fd_step = br_fd_step;
  e.br.jacobian_refresh = br_jacobian_refresh;
  e.br.solver = to_solver_options();
  return e;
}

MonteCarloConfig RunConfig::to_monte_carlo_config() const {
  MonteCarloConfig mc;
  mc.n_trials = n_trials;
  mc.methods = methods;
  mc.master_seed = master_seed;
  mc.workers = workers > 0 ? workers : hardware_workers();
  mc.opts = to_equilibrium_options();
  mc.rp = to_racing_params();
  mc.record_trajectories = record_trajectories;
  mc.eps = eps;
  mc.sampler.prox_max = prox_max;
  return mc;
}

}  // namespace brnash

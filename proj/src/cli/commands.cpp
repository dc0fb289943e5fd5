#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "lbp/cli.hpp"
#include "lbp/error.hpp"
#include "lbp/flemingviot.hpp"
#include "lbp/verify.hpp"

#ifndef LBP_VERSION
#define LBP_VERSION "0.0.0"
#endif

namespace lbp::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path output_dir(const ExperimentConfig& cfg, const Options& opt) {
  const fs::path dir = opt.out.value_or(fs::path(cfg.task.out));
  fs::create_directories(dir);
  return dir;
}

std::uint64_t effective_seed(const ExperimentConfig& cfg, const Options& opt) {
  return opt.seed.value_or(cfg.run.seed);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  return os;
}

json params_json(const ModelParams& p, const RegimeScaling& s) {
  json j = {{"b", p.b},
            {"d", p.d},
            {"c", p.c},
            {"K", p.K},
            {"c_K", p.c_K()},
            {"law", p.law->spec()},
            {"regime", to_string(p.regime)},
            {"time_factor", s.time_factor},
            {"size_factor", s.size_factor},
            {"n_star", s.n_star}};
  if (s.effective_size) j["N_e"] = *s.effective_size;
  return j;
}

void write_metadata(const fs::path& dir, const ExperimentConfig& cfg, const std::string& command, std::uint64_t seed,
                    json extra) {
  json meta = std::move(extra);
  meta["artifact"] = "lbpsim";
  meta["version"] = LBP_VERSION;
  meta["command"] = command;
  meta["config_hash"] = cfg.hash;
  meta["config_text"] = cfg.text;
  meta["seed"] = seed;
  if (cfg.model) {
    const ModelParams p = cfg.model_params();
    meta["params"] = params_json(p, regime_scaling(p));
  }
  auto os = open_out(dir / "metadata.json");
  os << meta.dump(2) << '\n';
}

template <class F>
void parallel_for(std::size_t count, unsigned threads, F body) {
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (n <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < n; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += n) body(i);
    });
  }
}

PopulationState initial_state(const ExperimentConfig& cfg, const RegimeScaling& scaling) {
  const auto& fr = cfg.run.init_fractions;
  if (!cfg.run.init_n) return equilibrium_state(scaling, fr);
  RegimeScaling fixed = scaling;
  fixed.size_factor = static_cast<double>(*cfg.run.init_n);
  fixed.n_star = 1.0;
  return equilibrium_state(fixed, fr);
}

std::vector<Trajectory> simulate_replicates(const ExperimentConfig& cfg, const Options& opt, std::uint64_t seed) {
  const ModelParams params = cfg.model_params();
  const RegimeScaling scaling = regime_scaling(params);
  const PopulationState init = initial_state(cfg, scaling);
  const std::vector<double> obs = cfg.run.observation_times();
  std::vector<Trajectory> out(cfg.run.replicates);
  parallel_for(out.size(), opt.threads, [&](std::size_t r) {
    Rng rng = derive_stream(seed, r);
    out[r] = simulate(params, init, cfg.run.horizon, obs, rng);
    out[r].seed = seed;
    out[r].replicate = r;
  });
  return out;
}

void write_frequency_csv(std::ostream& os, const FrequencyPath& path) {
  os << "scaled_time,x\n";
  for (const auto& r : path.records) os << fmt::format("{},{}\n", r.scaled_time, r.x);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(tok);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool with_replicate, bool header) {
  const std::size_t types = traj.records.empty() ? 0 : traj.records.front().freq.size();
  if (header) {
    if (with_replicate) os << "replicate,";
    os << "scaled_time,N_bar";
    for (std::size_t i = 0; i < types; ++i) os << ",freq_" << i;
    os << '\n';
  }
  for (const auto& r : traj.records) {
    if (with_replicate) os << traj.replicate << ',';
    os << fmt::format("{},{}", r.scaled_time, r.n_bar);
    for (double f : r.freq) os << fmt::format(",{}", f);
    os << '\n';
  }
}

std::vector<Trajectory> read_trajectory_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidParameter("trajectory CSV: empty input");
  const auto head = split(line, ',');
  const bool long_format = !head.empty() && head[0] == "replicate";
  const std::size_t off = long_format ? 1 : 0;
  if (head.size() < off + 2 || head[off] != "scaled_time" || head[off + 1] != "N_bar") {
    throw InvalidParameter("trajectory CSV: header must start with [replicate,]scaled_time,N_bar");
  }
  for (std::size_t i = off + 2; i < head.size(); ++i) {
    if (head[i] != "freq_" + std::to_string(i - off - 2)) {
      throw InvalidParameter("trajectory CSV: unexpected column '" + head[i] + "'");
    }
  }
  std::vector<Trajectory> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != head.size()) throw InvalidParameter(fmt::format("trajectory CSV: line {} has {} columns", lineno, cols.size()));
    std::uint64_t rep = 0;
    try {
      if (long_format) rep = std::stoull(cols[0]);
      TrajectoryRecord rec;
      rec.scaled_time = std::stod(cols[off]);
      rec.n_bar = std::stod(cols[off + 1]);
      for (std::size_t i = off + 2; i < cols.size(); ++i) rec.freq.push_back(std::stod(cols[i]));
      if (out.empty() || out.back().replicate != rep) {
        out.emplace_back();
        out.back().replicate = rep;
      }
      if (!out.back().records.empty() && !(rec.scaled_time > out.back().records.back().scaled_time)) {
        throw InvalidParameter(fmt::format("trajectory CSV: line {}: scaled_time not increasing", lineno));
      }
      out.back().records.push_back(std::move(rec));
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const InvalidParameter*>(&e)) throw;
      throw InvalidParameter(fmt::format("trajectory CSV: line {}: malformed number", lineno));
    }
  }
  if (out.empty()) throw InvalidParameter("trajectory CSV: no records");
  return out;
}

int cmd_simulate(const ExperimentConfig& cfg, const Options& opt, std::ostream& log) {
  const std::uint64_t seed = effective_seed(cfg, opt);
  const fs::path dir = output_dir(cfg, opt);
  const std::vector<Trajectory> trajs = simulate_replicates(cfg, opt, seed);

  json files = json::array();
  std::size_t extinct = 0;
  for (const auto& t : trajs) extinct += t.extinction_time.has_value();
  if (opt.format == "jsonl") {
    auto os = open_out(dir / "trajectories.jsonl");
    for (const auto& t : trajs) {
      for (const auto& r : t.records) {
        os << json{{"replicate", t.replicate}, {"scaled_time", r.scaled_time}, {"N_bar", r.n_bar}, {"freq", r.freq}}.dump()
           << '\n';
      }
    }
    files.push_back("trajectories.jsonl");
  } else if (opt.long_format) {
    auto os = open_out(dir / "trajectories.csv");
    for (std::size_t i = 0; i < trajs.size(); ++i) write_trajectory_csv(os, trajs[i], true, i == 0);
    files.push_back("trajectories.csv");
  } else {
    for (const auto& t : trajs) {
      const std::string name = fmt::format("trajectory_{:04d}.csv", t.replicate);
      auto os = open_out(dir / name);
      write_trajectory_csv(os, t, false, true);
      files.push_back(name);
    }
  }
  write_metadata(dir, cfg, "simulate", seed,
                 {{"replicates", trajs.size()}, {"extinct_replicates", extinct}, {"files", files}});
  log << fmt::format("simulate: {} replicate(s) written to {}\n", trajs.size(), dir.string());
  return kExitOk;
}

int cmd_coalescent(const ExperimentConfig& cfg, const Options& opt, std::ostream& log) {
  const std::uint64_t seed = effective_seed(cfg, opt);
  const fs::path dir = output_dir(cfg, opt);
  const LambdaMeasure lambda = cfg.task_lambda();
  {
    auto os = open_out(dir / "rates.csv");
    os << "n,k,rate\n";
    for (int n = 2; n <= cfg.task.n_max; ++n) {
      for (int k = 2; k <= n; ++k) os << fmt::format("{},{},{}\n", n, k, merge_rate(n, k, lambda));
    }
  }
  {
    std::vector<double> ts = cfg.task.t_list;
    std::sort(ts.begin(), ts.end());
    auto os = open_out(dir / "block_counts.csv");
    os << "t,state,prob\n";
    for (double t : ts) {
      const auto p = block_count_distribution(cfg.task.n, lambda, t);
      for (int j = 1; j <= cfg.task.n; ++j) os << fmt::format("{},{},{}\n", t, j, p[j - 1]);
    }
  }
  write_metadata(dir, cfg, "coalescent", seed,
                 {{"lambda", lambda.describe()},
                  {"lambda_total_mass", lambda.total_mass()},
                  {"n", cfg.task.n},
                  {"n_max", cfg.task.n_max},
                  {"files", {"rates.csv", "block_counts.csv"}}});
  log << fmt::format("coalescent: {} rate table and block-count distribution written to {}\n", lambda.describe(),
                     dir.string());
  return kExitOk;
}

int cmd_fv(const ExperimentConfig& cfg, const Options& opt, std::ostream& log) {
  const std::uint64_t seed = effective_seed(cfg, opt);
  const fs::path dir = output_dir(cfg, opt);
  const LambdaMeasure lambda = cfg.task_lambda();
  const bool wf = cfg.task.kind == "wf";
  if (wf && !lambda.has_atom_at_zero()) throw ConfigError("task.kind = wf needs a Kingman Lambda");
  if (!wf && lambda.has_atom_at_zero()) throw ConfigError("task.kind = lfv needs a Lambda without atom at 0");
  const double x0 = cfg.task.x0_list.front();
  const std::vector<double> obs =
      (cfg.run.obs_times.empty() && cfg.run.obs_points == 0) ? std::vector<double>{} : cfg.run.observation_times();

  std::vector<FrequencyPath> paths(cfg.task.paths);
  parallel_for(paths.size(), opt.threads, [&](std::size_t r) {
    Rng rng = derive_stream(seed, r);
    paths[r] = wf ? simulate_wf(lambda.total_mass(), x0, cfg.run.horizon, cfg.task.dt, rng, obs)
                  : simulate_lfv(lambda, x0, cfg.run.horizon, cfg.task.jump_floor, cfg.task.dt, rng, obs);
    paths[r].seed = seed;
  });
  json files = json::array();
  if (opt.format == "jsonl") {
    auto os = open_out(dir / "frequency_paths.jsonl");
    for (std::size_t r = 0; r < paths.size(); ++r) {
      for (const auto& rec : paths[r].records) {
        os << json{{"path", r}, {"scaled_time", rec.scaled_time}, {"x", rec.x}}.dump() << '\n';
      }
    }
    files.push_back("frequency_paths.jsonl");
  } else {
    for (std::size_t r = 0; r < paths.size(); ++r) {
      const std::string name = fmt::format("frequency_{:04d}.csv", r);
      auto os = open_out(dir / name);
      write_frequency_csv(os, paths[r]);
      files.push_back(name);
    }
  }
  json extra = {{"lambda", lambda.describe()}, {"kind", cfg.task.kind}, {"x0", x0}, {"dt", cfg.task.dt},
                {"paths", paths.size()}, {"files", files}};
  if (!wf) extra["jump_floor"] = cfg.task.jump_floor;
  write_metadata(dir, cfg, "fv", seed, extra);
  log << fmt::format("fv: {} {} path(s) written to {}\n", paths.size(), cfg.task.kind, dir.string());
  return kExitOk;
}

int cmd_duality(const ExperimentConfig& cfg, const Options& opt, std::ostream& log) {
  const std::uint64_t seed = effective_seed(cfg, opt);
  const fs::path dir = output_dir(cfg, opt);
  const TaskSection& task = cfg.task;
  const LambdaMeasure lambda = cfg.task_lambda();

  ForwardSource source;
  json source_json;
  if (task.source == "particle") {
    source = ParticleSource{cfg.model_params()};
    source_json = {{"source", "particle"}};
  } else if (task.source == "wf") {
    if (!lambda.has_atom_at_zero()) throw ConfigError("task.source = wf needs a Kingman Lambda");
    source = WfSource{lambda.total_mass(), task.dt};
    source_json = {{"source", "wf"}, {"rate", lambda.total_mass()}, {"dt", task.dt}};
  } else {
    if (lambda.has_atom_at_zero()) throw ConfigError("task.source = lfv needs a Lambda without atom at 0");
    source = LfvSource{lambda, task.jump_floor, task.dt, std::nullopt};
    source_json = {{"source", "lfv"}, {"jump_floor", task.jump_floor}, {"dt", task.dt}};
  }
  source_json["lambda"] = lambda.describe();
  if (cfg.model) source_json["params"] = params_json(cfg.model_params(), regime_scaling(cfg.model_params()));

  std::vector<double> ts = task.t_list;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  const int max_n = *std::max_element(task.n_list.begin(), task.n_list.end());

  auto grid_csv = open_out(dir / "duality_grid.csv");
  grid_csv << "x0,n,t,forward_mean,forward_se,replicates,dual,z,pass,extinction_frac\n";
  std::size_t cell = 0;
  std::size_t failures = 0;
  json files = json::array();
  for (std::size_t xi = 0; xi < task.x0_list.size(); ++xi) {
    const double x0 = task.x0_list[xi];
    const ForwardGrid grid = forward_moments(source, x0, ts, max_n, cfg.run.replicates, seed + xi, opt.threads);
    for (int n : task.n_list) {
      for (std::size_t ti = 0; ti < ts.size(); ++ti) {
        const double dual = dual_moment(lambda, ts[ti], n, x0);
        DualityReport rep = compare(grid.at(ti, n), dual, task.z_threshold);
        if (!rep.pass && task.rel_tolerance > 0.0 && std::abs(rep.forward.mean - dual) <= task.rel_tolerance * std::abs(dual)) {
          rep.pass = true;
          rep.provenance["passed_by_relative_tolerance"] = true;
        }
        rep.extinction_frac = grid.extinction_frac[ti];
        rep.provenance.update(source_json);
        rep.provenance["t"] = ts[ti];
        rep.provenance["n"] = n;
        rep.provenance["x0"] = x0;
        rep.provenance["seed"] = seed + xi;
        rep.provenance["extinction_flag"] = rep.extinction_frac > 0.01;
        const std::string name = fmt::format("duality_report_{:03d}.json", cell++);
        auto os = open_out(dir / name);
        os << rep.to_json().dump(2) << '\n';
        files.push_back(name);
        grid_csv << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", x0, n, ts[ti], rep.forward.mean, rep.forward.std_error,
                                rep.forward.n_samples, dual, rep.z_score, rep.pass ? 1 : 0, rep.extinction_frac);
        failures += !rep.pass;
      }
    }
  }
  // Two-sided tail of one cell at the threshold times the number of cells.
  const double per_cell = std::erfc(task.z_threshold / std::sqrt(2.0));
  write_metadata(dir, cfg, "duality", seed,
                 {{"cells", cell},
                  {"failures", failures},
                  {"z_threshold", task.z_threshold},
                  {"familywise_error_bound", std::min(1.0, per_cell * static_cast<double>(cell))},
                  {"source", source_json},
                  {"files", files}});
  log << fmt::format("duality: {} cell(s), {} failure(s)\n", cell, failures);
  return failures == 0 ? kExitOk : kExitCheckFailed;
}

int cmd_occupation(const ExperimentConfig& cfg, const Options& opt, std::ostream& log) {
  const std::uint64_t seed = effective_seed(cfg, opt);
  const fs::path dir = output_dir(cfg, opt);
  std::vector<Trajectory> trajs;
  double n_star = 0.0;
  if (!cfg.task.input.empty()) {
    const fs::path in = cfg.task.input;
    std::vector<fs::path> inputs;
    if (fs::is_directory(in)) {
      for (const auto& e : fs::directory_iterator(in)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("trajectory", 0) == 0 && e.path().extension() == ".csv") inputs.push_back(e.path());
      }
      std::sort(inputs.begin(), inputs.end());
    } else {
      inputs.push_back(in);
    }
    if (inputs.empty()) throw ConfigError("task.input: no trajectory CSV found in '" + in.string() + "'");
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      std::ifstream is(inputs[i]);
      if (!is) throw ConfigError("task.input: cannot read '" + inputs[i].string() + "'");
      auto got = read_trajectory_csv(is);
      for (auto& t : got) {
        if (inputs.size() > 1) t.replicate = i;
        trajs.push_back(std::move(t));
      }
    }
    if (cfg.task.n_star) {
      n_star = *cfg.task.n_star;
    } else if (cfg.model) {
      n_star = regime_scaling(cfg.model_params()).n_star;
    } else {
      throw ConfigError("occupation from input files needs task.n_star or a [model] section");
    }
  } else {
    trajs = simulate_replicates(cfg, opt, seed);
    n_star = cfg.task.n_star.value_or(regime_scaling(cfg.model_params()).n_star);
  }

  auto os = open_out(dir / "occupation.csv");
  os << "replicate,sup_dev,frac_outside\n";
  double mean_frac = 0.0;
  std::size_t within = 0;
  for (const auto& t : trajs) {
    const OccupationStats st = occupation_stats(t, cfg.task.eps, n_star);
    os << fmt::format("{},{},{}\n", t.replicate, st.sup_dev, st.frac_outside);
    mean_frac += st.frac_outside;
    within += st.sup_dev <= cfg.task.eps;
  }
  mean_frac /= static_cast<double>(trajs.size());
  const double frac_within = static_cast<double>(within) / static_cast<double>(trajs.size());
  write_metadata(dir, cfg, "occupation", seed,
                 {{"eps", cfg.task.eps},
                  {"n_star", n_star},
                  {"replicates", trajs.size()},
                  {"mean_frac_outside", mean_frac},
                  {"frac_replicates_sup_within_eps", frac_within},
                  {"files", {"occupation.csv"}}});
  log << fmt::format("occupation: {} replicate(s), mean time fraction outside band {}, sup within band in {}\n",
                     trajs.size(), mean_frac, frac_within);
  return kExitOk;
}

int run(const std::string& command, const Options& opt, std::ostream& log) {
  try {
    if (command == "selftest") return cmd_selftest(opt, log);
    if (opt.format != "csv" && opt.format != "jsonl") throw ConfigError("--format must be csv or jsonl");
    if (opt.config.empty()) throw ConfigError(command + " needs --config");
    const ExperimentConfig cfg = load_config(opt.config);
    if (command == "simulate") return cmd_simulate(cfg, opt, log);
    if (command == "coalescent") return cmd_coalescent(cfg, opt, log);
    if (command == "fv") return cmd_fv(cfg, opt, log);
    if (command == "duality") return cmd_duality(cfg, opt, log);
    if (command == "occupation") return cmd_occupation(cfg, opt, log);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace lbp::cli

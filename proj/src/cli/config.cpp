#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "lbp/cli.hpp"
#include "lbp/error.hpp"

namespace lbp::cli {
namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(out)) throw ConfigError(key + ": expected a number, got '" + raw + "'");
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": expected an integer, got '" + raw + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ConfigError(key + ": expected an unsigned integer, got '" + raw + "'");
  return out;
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& raw, F convert) {
  std::vector<T> out;
  std::stringstream ss(raw);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (trim(tok).empty()) continue;
    out.push_back(convert(key, tok));
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

using Setter = std::function<void(const std::string&, const std::string&)>;

void apply_section(const std::string& name, const pt::ptree& section, const std::map<std::string, Setter>& setters) {
  for (const auto& [key, node] : section) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("[" + name + "] unknown key '" + key + "'");
    it->second(name + "." + key, node.data());
  }
}

}  // namespace

std::vector<double> RunSection::observation_times() const {
  if (!obs_times.empty()) return obs_times;
  if (obs_points == 0) return {horizon};
  if (obs_points == 1) return {0.0};
  std::vector<double> t(obs_points);
  for (std::size_t i = 0; i < obs_points; ++i) {
    t[i] = horizon * static_cast<double>(i) / static_cast<double>(obs_points - 1);
  }
  t.back() = horizon;
  return t;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

ModelParams ExperimentConfig::model_params() const {
  if (!model) throw ConfigError("this command needs a [model] section");
  ModelParams p;
  p.b = model->b;
  p.d = model->d;
  p.c = model->c;
  p.K = model->K;
  try {
    p.law = std::make_shared<const OffspringLaw>(parse_offspring_law(model->law));
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("model.law: ") + e.what());
  }
  if (model->regime == "finite_variance") {
    p.regime = Regime::finite_variance();
  } else if (model->regime == "neveu") {
    p.regime = Regime::neveu();
  } else if (model->regime == "stable") {
    double a = 0.0;
    if (model->alpha) {
      a = *model->alpha;
    } else if (p.law->kind() == OffspringLaw::Kind::Zeta) {
      a = p.law->tail_exponent();
    } else {
      throw ConfigError("model.alpha is required for a stable regime with an explicit pmf");
    }
    p.regime = Regime::stable(a);
  } else {
    throw ConfigError("model.regime: expected finite_variance, stable or neveu, got '" + model->regime + "'");
  }
  try {
    p.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  return p;
}

LambdaMeasure ExperimentConfig::task_lambda() const {
  if (task.lambda == "model") {
    const ModelParams p = model_params();
    return lambda_from_model(p, regime_scaling(p));
  }
  try {
    return parse_lambda(task.lambda);
  } catch (const InvalidParameter& e) {
    throw ConfigError(std::string("task.lambda: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }

  ExperimentConfig cfg;
  cfg.text = text;
  cfg.hash = fnv1a_hex(text);

  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) throw ConfigError("key '" + name + "' outside of a section");
    if (name == "model") {
      ModelSection m;
      apply_section(name, section,
                    {
                        {"b", [&](auto& k, auto& v) { m.b = to_double(k, v); }},
                        {"d", [&](auto& k, auto& v) { m.d = to_double(k, v); }},
                        {"c", [&](auto& k, auto& v) { m.c = to_double(k, v); }},
                        {"K", [&](auto& k, auto& v) { m.K = to_double(k, v); }},
                        {"law", [&](auto&, auto& v) { m.law = trim(v); }},
                        {"regime", [&](auto&, auto& v) { m.regime = trim(v); }},
                        {"alpha", [&](auto& k, auto& v) { m.alpha = to_double(k, v); }},
                    });
      cfg.model = m;
    } else if (name == "run") {
      RunSection& r = cfg.run;
      apply_section(name, section,
                    {
                        {"horizon", [&](auto& k, auto& v) { r.horizon = to_double(k, v); }},
                        {"obs_times", [&](auto& k, auto& v) { r.obs_times = to_list<double>(k, v, to_double); }},
                        {"obs_points", [&](auto& k, auto& v) { r.obs_points = to_u64(k, v); }},
                        {"replicates", [&](auto& k, auto& v) { r.replicates = to_u64(k, v); }},
                        {"seed", [&](auto& k, auto& v) { r.seed = to_u64(k, v); }},
                        {"init_fractions",
                         [&](auto& k, auto& v) { r.init_fractions = to_list<double>(k, v, to_double); }},
                        {"init_n", [&](auto& k, auto& v) { r.init_n = to_int(k, v); }},
                    });
    } else if (name == "task") {
      TaskSection& t = cfg.task;
      auto to_int32 = [](const std::string& k, const std::string& v) { return static_cast<int>(to_int(k, v)); };
      apply_section(name, section,
                    {
                        {"out", [&](auto&, auto& v) { t.out = trim(v); }},
                        {"eps", [&](auto& k, auto& v) { t.eps = to_double(k, v); }},
                        {"n_star", [&](auto& k, auto& v) { t.n_star = to_double(k, v); }},
                        {"source", [&](auto&, auto& v) { t.source = trim(v); }},
                        {"lambda", [&](auto&, auto& v) { t.lambda = trim(v); }},
                        {"n", [&](auto& k, auto& v) { t.n = to_int32(k, v); }},
                        {"n_max", [&](auto& k, auto& v) { t.n_max = to_int32(k, v); }},
                        {"n_list", [&](auto& k, auto& v) { t.n_list = to_list<int>(k, v, to_int32); }},
                        {"t_list", [&](auto& k, auto& v) { t.t_list = to_list<double>(k, v, to_double); }},
                        {"x0_list", [&](auto& k, auto& v) { t.x0_list = to_list<double>(k, v, to_double); }},
                        {"jump_floor", [&](auto& k, auto& v) { t.jump_floor = to_double(k, v); }},
                        {"dt", [&](auto& k, auto& v) { t.dt = to_double(k, v); }},
                        {"z_threshold", [&](auto& k, auto& v) { t.z_threshold = to_double(k, v); }},
                        {"rel_tolerance", [&](auto& k, auto& v) { t.rel_tolerance = to_double(k, v); }},
                        {"paths", [&](auto& k, auto& v) { t.paths = to_u64(k, v); }},
                        {"kind", [&](auto&, auto& v) { t.kind = trim(v); }},
                        {"input", [&](auto&, auto& v) { t.input = trim(v); }},
                    });
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
  }

  // Invariants checked at load.
  const RunSection& r = cfg.run;
  if (!(r.horizon >= 0.0)) throw ConfigError("run.horizon must be >= 0");
  if (r.replicates < 1) throw ConfigError("run.replicates must be >= 1");
  for (std::size_t i = 0; i < r.obs_times.size(); ++i) {
    if (r.obs_times[i] < 0.0 || r.obs_times[i] > r.horizon) throw ConfigError("run.obs_times must lie in [0, horizon]");
    if (i > 0 && !(r.obs_times[i] > r.obs_times[i - 1])) throw ConfigError("run.obs_times must be strictly increasing");
  }
  double frac_sum = 0.0;
  for (double f : r.init_fractions) {
    if (f < 0.0) throw ConfigError("run.init_fractions must be >= 0");
    frac_sum += f;
  }
  if (std::abs(frac_sum - 1.0) > 1e-9) throw ConfigError("run.init_fractions must sum to 1");
  if (r.init_n && *r.init_n < 1) throw ConfigError("run.init_n must be >= 1");

  const TaskSection& t = cfg.task;
  if (!(t.eps > 0.0)) throw ConfigError("task.eps must be positive");
  if (!(t.dt > 0.0)) throw ConfigError("task.dt must be positive");
  if (!(t.jump_floor > 0.0 && t.jump_floor < 0.5)) throw ConfigError("task.jump_floor must lie in (0, 0.5)");
  if (t.n < 1 || t.n > kMaxDenseBlocks) throw ConfigError("task.n must lie in [1, 64]");
  if (t.n_max < 2) throw ConfigError("task.n_max must be >= 2");
  if (!(t.z_threshold > 0.0)) throw ConfigError("task.z_threshold must be positive");
  if (!(t.rel_tolerance >= 0.0)) throw ConfigError("task.rel_tolerance must be >= 0");
  if (t.paths < 1) throw ConfigError("task.paths must be >= 1");
  if (t.n_list.empty() || t.t_list.empty() || t.x0_list.empty()) {
    throw ConfigError("task.n_list, task.t_list and task.x0_list must not be empty");
  }
  for (double x : t.x0_list) {
    if (x < 0.0 || x > 1.0) throw ConfigError("task.x0_list entries must lie in [0, 1]");
  }
  for (double x : t.t_list) {
    if (x < 0.0) throw ConfigError("task.t_list entries must be >= 0");
  }
  for (int n : t.n_list) {
    if (n < 1 || n > 12) throw ConfigError("task.n_list entries must lie in [1, 12]");
  }
  if (t.source != "particle" && t.source != "wf" && t.source != "lfv") {
    throw ConfigError("task.source: expected particle, wf or lfv");
  }
  if (t.kind != "wf" && t.kind != "lfv") throw ConfigError("task.kind: expected wf or lfv");
  if (t.lambda != "model") {
    try {
      parse_lambda(t.lambda);
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("task.lambda: ") + e.what());
    }
  }
  if (cfg.model) cfg.model_params();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  std::string text = ss.str();
  if (path.extension() == ".json") {
    // Metadata sidecar: re-run with the recorded config and effective seed.
    std::uint64_t seed = 0;
    try {
      const auto meta = nlohmann::json::parse(text);
      text = meta.at("config_text").get<std::string>();
      seed = meta.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("metadata '" + path.string() + "' has no usable config_text/seed: " + e.what());
    }
    ExperimentConfig cfg = parse_config(text);
    cfg.run.seed = seed;
    return cfg;
  }
  return parse_config(text);
}

}  // namespace lbp::cli

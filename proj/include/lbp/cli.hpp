#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lbp/coalescent.hpp"
#include "lbp/dynamics.hpp"

namespace lbp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitCheckFailed = 3;

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ModelSection {
  double b = 1.0;
  double d = 0.0;
  double c = 1.0;
  double K = 100.0;
  std::string law = "pmf:1";
  std::string regime = "finite_variance";
  std::optional<double> alpha;
};

struct RunSection {
  double horizon = 1.0;
  std::vector<double> obs_times;
  std::size_t obs_points = 0;  // uniform grid on [0, horizon] when obs_times is empty
  std::size_t replicates = 1;
  std::uint64_t seed = 1;
  std::vector<double> init_fractions{1.0};
  std::optional<std::int64_t> init_n;

  std::vector<double> observation_times() const;
};

struct TaskSection {
  std::string out = "out";
  double eps = 0.2;
  std::optional<double> n_star;
  std::string source = "wf";
  std::string lambda = "model";
  int n = 5;
  int n_max = 20;
  std::vector<int> n_list{2, 3, 4};
  std::vector<double> t_list{0.1, 0.25, 0.5};
  std::vector<double> x0_list{0.5};
  double jump_floor = 1e-3;
  double dt = 1e-4;
  double z_threshold = 3.0;
  double rel_tolerance = 0.0;
  std::size_t paths = 1;
  std::string kind = "wf";
  std::string input;
};

struct ExperimentConfig {
  std::optional<ModelSection> model;
  RunSection run;
  TaskSection task;
  std::string text;  // verbatim config text
  std::string hash;  // FNV-1a 64 of `text`, hex

  /// Validated model parameters. Throws ConfigError when there is no [model].
  ModelParams model_params() const;
  /// The task's Lambda, resolving "model" through lambda_from_model.
  LambdaMeasure task_lambda() const;
};

/// Parses sectioned key-value text ([model], [run], [task]). Unknown sections
/// or keys and failed invariants raise ConfigError.
ExperimentConfig parse_config(const std::string& text);

/// Reads a config file; a metadata JSON written by a previous run is accepted
/// too, in which case its embedded config text is used.
ExperimentConfig load_config(const std::filesystem::path& path);

std::string fnv1a_hex(const std::string& text);

struct Options {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string format = "csv";
  bool long_format = false;
  std::filesystem::path golden_dir;
};

int cmd_simulate(const ExperimentConfig& cfg, const Options& opt, std::ostream& log);
int cmd_coalescent(const ExperimentConfig& cfg, const Options& opt, std::ostream& log);
int cmd_fv(const ExperimentConfig& cfg, const Options& opt, std::ostream& log);
int cmd_duality(const ExperimentConfig& cfg, const Options& opt, std::ostream& log);
int cmd_occupation(const ExperimentConfig& cfg, const Options& opt, std::ostream& log);
int cmd_selftest(const Options& opt, std::ostream& log);

/// Loads the config (if the command needs one), runs the command and maps
/// exceptions onto the exit-code contract.
int run(const std::string& command, const Options& opt, std::ostream& log);

/// Trajectory CSV writing/reading (wide: one file per replicate; long: with
/// a leading `replicate` column).
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool with_replicate, bool header);
std::vector<Trajectory> read_trajectory_csv(std::istream& is);

}  // namespace lbp::cli

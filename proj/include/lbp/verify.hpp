#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <span>
#include <variant>
#include <vector>

#include "lbp/coalescent.hpp"
#include "lbp/dynamics.hpp"

namespace lbp {

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;

  /// Sample mean and standard error from a sum and a sum of squares.
  static MonteCarloEstimate from_sums(double sum, double sum_sq, std::size_t n);
  static MonteCarloEstimate from_samples(std::span<const double> xs);
};

/// Particle system with two neutral types; type 1 starts at fraction x0 of
/// the equilibrium population.
struct ParticleSource {
  ModelParams params;
};

struct WfSource {
  double rate = 1.0;
  double dt = 1e-4;
};

struct LfvSource {
  LambdaMeasure lambda = LambdaMeasure::uniform(1.0);
  double eps = 1e-3;
  double dt = 1e-4;
  std::optional<double> drive_eps;  // see lfv_ensemble
};

using ForwardSource = std::variant<ParticleSource, WfSource, LfvSource>;

/// Estimates of E[X_t^n] over a grid of times and n = 1..max_n from one set
/// of replicate paths.
struct ForwardGrid {
  std::vector<double> times;
  int max_n = 1;
  std::size_t replicates = 0;
  std::vector<std::vector<MonteCarloEstimate>> moments;  // [time][n-1]
  std::vector<MonteCarloEstimate> heterozygosity;         // E[X_t (1 - X_t)], per time
  std::vector<double> extinction_frac;                    // per time, particle source only

  const MonteCarloEstimate& at(std::size_t time_index, int n) const { return moments[time_index][n - 1]; }
};

inline constexpr int kMaxForwardMoment = 12;

ForwardGrid forward_moments(const ForwardSource& source, double x0, std::span<const double> times, int max_n,
                            std::size_t replicates, std::uint64_t seed, unsigned threads = 1);

/// forward_moments for an LfvSource at each of several jump floors, all from
/// one set of random numbers (see lfv_ensemble_coupled). Grid m equals
/// forward_moments(LfvSource{lambda, floors[m], dt, drive_eps}, ...).
std::vector<ForwardGrid> lfv_forward_moments_coupled(const LambdaMeasure& lambda, std::span<const double> floors,
                                                     double drive_eps, double dt, double x0,
                                                     std::span<const double> times, int max_n, std::size_t replicates,
                                                     std::uint64_t seed, unsigned threads = 1);

MonteCarloEstimate forward_moment(const ForwardSource& source, double x0, double t, int n, std::size_t replicates,
                                  std::uint64_t seed, unsigned threads = 1);

/// E[x0^|pi_t|] for the Lambda-coalescent started from n singletons.
double dual_moment(const LambdaMeasure& lambda, double t, int n, double x0);

/// x0 (1 - x0) exp(-Lambda([0,1]) t).
double heterozygosity_theory(const LambdaMeasure& lambda, double x0, double t);

struct DualityReport {
  MonteCarloEstimate forward;
  double dual = 0.0;
  double dual_se = 0.0;
  double z_score = 0.0;
  double threshold = 3.0;
  bool pass = false;
  bool hard_fail = false;  // zero combined SE with unequal means
  double extinction_frac = 0.0;
  nlohmann::json provenance = nlohmann::json::object();

  nlohmann::json to_json() const;
};

DualityReport compare(const MonteCarloEstimate& forward, double dual, double z_threshold = 3.0);
DualityReport compare(const MonteCarloEstimate& forward, const MonteCarloEstimate& dual, double z_threshold = 3.0);

}  // namespace lbp

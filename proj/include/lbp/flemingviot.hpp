#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lbp/coalescent.hpp"
#include "lbp/random.hpp"

namespace lbp {

struct FrequencyRecord {
  double scaled_time = 0.0;
  double x = 0.0;
};

/// Two-type frequency X_t of a (Lambda-)Fleming-Viot process.
struct FrequencyPath {
  std::vector<FrequencyRecord> records;
  LambdaMeasure generator = LambdaMeasure::kingman(1.0);
  double x0 = 0.0;
  double dt = 0.0;
  std::optional<double> jump_floor;
  std::uint64_t seed = 0;
};

/// Jump part and small-jump compensation of a Beta or uniform Lambda
/// truncated at `floor`: jumps u >= floor at total rate `jump_rate`, plus a
/// Wright-Fisher diffusion of rate Lambda((0, floor)).
struct TruncatedLambda {
  double alpha = 1.0;  // 1 for the uniform family
  double scale = 1.0;
  double floor = 1e-3;
  double jump_rate = 0.0;      // int_[floor,1] u^-2 Lambda(du)
  double diffusion_rate = 0.0; // Lambda((0, floor))
  double max_ratio = 0.0;      // (1 - floor) / floor, v = (1-u)/u ranges over [0, max_ratio]

  static TruncatedLambda make(const LambdaMeasure& lambda, double floor);

  /// Jump size u >= floor drawn exactly from u^-2 Lambda(du) restricted to [floor, 1].
  double sample_jump(Rng& rng) const;
};

/// State after a jump of size u towards the sampled type b in {0, 1}:
/// x + u (b - x), so the fraction u of the population takes type b.
inline double jump_update(double x, double u, double b) {
  const double y = x + u * (b - x);
  return y < 0.0 ? 0.0 : (y > 1.0 ? 1.0 : y);
}

/// Euler-Maruyama path of dX = sqrt(rate X (1-X)) dW. Records every step if
/// `obs_times` is empty, otherwise at those times (strictly increasing, <= horizon).
FrequencyPath simulate_wf(double rate, double x0, double horizon, double dt, Rng& rng,
                          std::span<const double> obs_times = {});

/// Lambda-Fleming-Viot path via the Poisson construction with jump floor eps.
FrequencyPath simulate_lfv(const LambdaMeasure& lambda, double x0, double horizon, double eps, double dt,
                           Rng& rng, std::span<const double> obs_times = {});

/// Paths of a batch evaluated at `obs_times`: values[obs][path].
using EnsembleValues = std::vector<std::vector<double>>;

struct EnsembleOptions {
  std::size_t paths = 0;
  double x0 = 0.5;
  double dt = 1e-4;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

EnsembleValues wf_ensemble(double rate, std::span<const double> obs_times, const EnsembleOptions& opt);

/// Lambda-FV ensemble with jump floor `eps`. When `drive_eps` < eps, the
/// Poisson points are generated at floor drive_eps and jumps below eps are
/// discarded; runs at different eps sharing drive_eps and seed are then
/// coupled through common random numbers.
EnsembleValues lfv_ensemble(const LambdaMeasure& lambda, double eps, std::span<const double> obs_times,
                            const EnsembleOptions& opt, std::optional<double> drive_eps = std::nullopt);

/// Ensembles for several jump floors (each >= drive_eps) from one set of
/// random numbers; result[m] is bit-identical to lfv_ensemble(lambda,
/// floors[m], obs_times, opt, drive_eps).
std::vector<EnsembleValues> lfv_ensemble_coupled(const LambdaMeasure& lambda, std::span<const double> floors,
                                                 std::span<const double> obs_times, const EnsembleOptions& opt,
                                                 double drive_eps);

}  // namespace lbp

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lbp/fenwick.hpp"
#include "lbp/offspring.hpp"
#include "lbp/random.hpp"
#include "lbp/regime.hpp"

namespace lbp {

/// Rates of the logistic branching process: each individual gives birth at
/// rate b to a batch drawn from `law`, and dies at rate d + (c/K) N.
struct ModelParams {
  double b = 1.0;
  double d = 0.0;
  double c = 1.0;
  double K = 1.0;
  std::shared_ptr<const OffspringLaw> law;
  Regime regime;

  double c_K() const { return c / K; }

  /// Throws InvalidParameter if rates, scale, law or regime are inconsistent.
  void validate() const;
};

/// Time and size units in which the scaled process converges.
struct RegimeScaling {
  double time_factor = 1.0;  // raw time per unit of scaled time
  double size_factor = 1.0;  // individuals per unit of N_bar
  double n_star = 1.0;
  std::optional<double> effective_size;  // N_e, finite-variance regime only
};

RegimeScaling regime_scaling(const ModelParams& params);

/// Type-count vector with a prefix-sum index for weighted type selection.
class PopulationState {
 public:
  PopulationState() = default;
  explicit PopulationState(std::vector<std::int64_t> counts, double raw_time = 0.0);

  std::span<const std::int64_t> counts() const { return counts_; }
  std::int64_t total() const { return total_; }
  std::size_t num_types() const { return counts_.size(); }
  double raw_time() const { return time_; }

  /// Type chosen with probability count / total. Requires total() > 0.
  std::size_t pick_type(Rng& rng) const {
    return index_.find(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total_))));
  }

  void add(std::size_t type, std::int64_t delta);

  /// Kahan-compensated advance of the raw clock.
  void advance(double wait) {
    const double y = wait - time_comp_;
    const double t = time_ + y;
    time_comp_ = (t - time_) - y;
    time_ = t;
  }

  /// True when the index agrees with the counts and the total.
  bool audit() const;

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
  FenwickTree index_;
  double time_ = 0.0;
  double time_comp_ = 0.0;
};

/// Initial state of ⌊size_factor · n_star⌋ individuals split over types by
/// `fractions` (rounded, the last type absorbing the remainder).
PopulationState equilibrium_state(const RegimeScaling& scaling, std::span<const double> fractions);

struct EventRecord {
  enum class Kind { Birth, Death };
  Kind kind = Kind::Birth;
  std::size_t type = 0;
  std::uint64_t offspring = 0;  // births only
  double wait = 0.0;
};

/// Draws the next event without applying it.
EventRecord draw_event(const PopulationState& state, const ModelParams& params, Rng& rng);

void apply_event(PopulationState& state, const EventRecord& event);

/// One exact Gillespie step. Throws AbsorbingState on an extinct population.
EventRecord step(PopulationState& state, const ModelParams& params, Rng& rng);

/// Type frequencies; unit mass on type 0 (the sentinel label) when extinct.
std::vector<double> frequency(const PopulationState& state);

struct TrajectoryRecord {
  double scaled_time = 0.0;
  double n_bar = 0.0;
  std::vector<double> freq;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  ModelParams params;
  RegimeScaling scaling;
  std::uint64_t seed = 0;
  std::uint64_t replicate = 0;
  std::uint64_t events = 0;
  std::optional<double> extinction_time;  // scaled
};

/// Runs the particle system until raw time time_factor * horizon_scaled and
/// records the left limit of the state at each observation instant.
Trajectory simulate(const ModelParams& params, PopulationState init, double horizon_scaled,
                    std::span<const double> obs_times, Rng& rng);

struct OccupationStats {
  double sup_dev = 0.0;
  double frac_outside = 0.0;
};

/// Sup of |N_bar - n_star| over records and the time fraction (piecewise
/// constant between records) with |N_bar - n_star| > eps.
OccupationStats occupation_stats(const Trajectory& traj, double eps, double n_star);

/// V(n) = n/n* - 1 - log(n/n*).
double lyapunov(double n, double n_star);

/// Solution of dn/dt = (bm - d - c n) n at raw time t from n0.
double logistic_flow(double n0, double t, const ModelParams& params);

}  // namespace lbp

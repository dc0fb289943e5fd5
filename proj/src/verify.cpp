#include "lbp/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "lbp/error.hpp"
#include "lbp/flemingviot.hpp"
#include "lbp/kernels.hpp"

namespace lbp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_grid(std::span<const double> times, int max_n, std::size_t replicates) {
  if (times.empty()) throw InvalidParameter("forward moments: no times");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw InvalidParameter("forward moments: negative time");
    if (i > 0 && !(times[i] > times[i - 1])) throw InvalidParameter("forward moments: times must be increasing");
  }
  if (max_n < 1 || max_n > kMaxForwardMoment) throw InvalidParameter("forward moments: n must lie in [1, 12]");
  if (replicates < 2) throw InvalidParameter("forward moments: need at least 2 replicates");
}

// Fills the grid from values[time][path].
void summarize(ForwardGrid& grid, const std::vector<std::vector<double>>& values) {
  const std::size_t reps = grid.replicates;
  grid.moments.assign(grid.times.size(), {});
  grid.heterozygosity.assign(grid.times.size(), {});
  std::vector<double> het(reps);
  for (std::size_t o = 0; o < grid.times.size(); ++o) {
    std::vector<double> sums(grid.max_n, 0.0);
    std::vector<double> sq(grid.max_n, 0.0);
    kernels::power_sums(values[o], sums, sq);
    for (int n = 1; n <= grid.max_n; ++n) {
      grid.moments[o].push_back(MonteCarloEstimate::from_sums(sums[n - 1], sq[n - 1], reps));
    }
    for (std::size_t r = 0; r < reps; ++r) het[r] = values[o][r] * (1.0 - values[o][r]);
    grid.heterozygosity[o] = MonteCarloEstimate::from_samples(het);
  }
}

// The limit processes start deterministically at x0.
void exact_start(ForwardGrid& grid, double x0) {
  for (std::size_t o = 0; o < grid.times.size(); ++o) {
    if (grid.times[o] != 0.0) continue;
    for (int n = 1; n <= grid.max_n; ++n) grid.moments[o][n - 1] = {std::pow(x0, n), 0.0, grid.replicates};
    grid.heterozygosity[o] = {x0 * (1.0 - x0), 0.0, grid.replicates};
  }
}

std::vector<std::vector<double>> particle_values(const ParticleSource& src, double x0, std::span<const double> times,
                                                 std::size_t reps, std::uint64_t seed, unsigned threads,
                                                 std::vector<double>& extinct) {
  const RegimeScaling scaling = regime_scaling(src.params);
  const double fractions[2] = {1.0 - x0, x0};
  const PopulationState init = equilibrium_state(scaling, fractions);
  const double horizon = times.back();

  std::vector<std::vector<double>> values(times.size(), std::vector<double>(reps));
  std::vector<std::vector<unsigned char>> dead(times.size(), std::vector<unsigned char>(reps, 0));
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t r = first; r < reps; r += stride) {
      Rng rng = derive_stream(seed, r);
      const Trajectory traj = simulate(src.params, init, horizon, times, rng);
      for (std::size_t o = 0; o < times.size(); ++o) {
        values[o][r] = traj.records[o].freq[1];
        dead[o][r] = traj.records[o].n_bar == 0.0;
      }
    }
  };
  const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
  if (nthreads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(work, t, nthreads);
  }
  extinct.assign(times.size(), 0.0);
  for (std::size_t o = 0; o < times.size(); ++o) {
    extinct[o] = static_cast<double>(std::count(dead[o].begin(), dead[o].end(), 1)) / static_cast<double>(reps);
  }
  return values;
}

}  // namespace

MonteCarloEstimate MonteCarloEstimate::from_sums(double sum, double sum_sq, std::size_t n) {
  if (n < 2) throw InvalidParameter("Monte Carlo estimate needs at least 2 samples");
  const double dn = static_cast<double>(n);
  const double mean = sum / dn;
  const double var = std::max(0.0, (sum_sq - sum * mean) / (dn - 1.0));
  return {mean, std::sqrt(var / dn), n};
}

MonteCarloEstimate MonteCarloEstimate::from_samples(std::span<const double> xs) {
  if (xs.size() < 2) throw InvalidParameter("Monte Carlo estimate needs at least 2 samples");
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double dn = static_cast<double>(xs.size());
  const double mean = sum / dn;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (dn - 1.0) / dn), xs.size()};
}

ForwardGrid forward_moments(const ForwardSource& source, double x0, std::span<const double> times, int max_n,
                            std::size_t replicates, std::uint64_t seed, unsigned threads) {
  check_grid(times, max_n, replicates);
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw InvalidParameter("forward moments: x0 must lie in [0, 1]");
  ForwardGrid grid;
  grid.times.assign(times.begin(), times.end());
  grid.max_n = max_n;
  grid.replicates = replicates;
  grid.extinction_frac.assign(times.size(), 0.0);

  EnsembleOptions opt;
  opt.paths = replicates;
  opt.x0 = x0;
  opt.seed = seed;
  opt.threads = threads;
  const std::vector<std::vector<double>> values = std::visit(
      Overloaded{
          [&](const ParticleSource& s) {
            return particle_values(s, x0, times, replicates, seed, threads, grid.extinction_frac);
          },
          [&](const WfSource& s) {
            opt.dt = s.dt;
            return wf_ensemble(s.rate, times, opt);
          },
          [&](const LfvSource& s) {
            opt.dt = s.dt;
            return lfv_ensemble(s.lambda, s.eps, times, opt, s.drive_eps);
          },
      },
      source);
  summarize(grid, values);
  if (!std::holds_alternative<ParticleSource>(source)) exact_start(grid, x0);
  return grid;
}

std::vector<ForwardGrid> lfv_forward_moments_coupled(const LambdaMeasure& lambda, std::span<const double> floors,
                                                     double drive_eps, double dt, double x0,
                                                     std::span<const double> times, int max_n, std::size_t replicates,
                                                     std::uint64_t seed, unsigned threads) {
  check_grid(times, max_n, replicates);
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw InvalidParameter("forward moments: x0 must lie in [0, 1]");
  EnsembleOptions opt;
  opt.paths = replicates;
  opt.x0 = x0;
  opt.dt = dt;
  opt.seed = seed;
  opt.threads = threads;
  const std::vector<EnsembleValues> values = lfv_ensemble_coupled(lambda, floors, times, opt, drive_eps);
  std::vector<ForwardGrid> grids;
  for (const auto& v : values) {
    ForwardGrid& grid = grids.emplace_back();
    grid.times.assign(times.begin(), times.end());
    grid.max_n = max_n;
    grid.replicates = replicates;
    grid.extinction_frac.assign(times.size(), 0.0);
    summarize(grid, v);
    exact_start(grid, x0);
  }
  return grids;
}

MonteCarloEstimate forward_moment(const ForwardSource& source, double x0, double t, int n, std::size_t replicates,
                                  std::uint64_t seed, unsigned threads) {
  const double times[1] = {t};
  return forward_moments(source, x0, times, n, replicates, seed, threads).at(0, n);
}

double dual_moment(const LambdaMeasure& lambda, double t, int n, double x0) {
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw InvalidParameter("dual_moment: x0 must lie in [0, 1]");
  const std::vector<double> p = block_count_distribution(n, lambda, t);
  double value = 0.0;
  double power = 1.0;
  for (int j = 1; j <= n; ++j) {
    power *= x0;
    value += p[j - 1] * power;
  }
  return value;
}

double heterozygosity_theory(const LambdaMeasure& lambda, double x0, double t) {
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw InvalidParameter("heterozygosity_theory: x0 must lie in [0, 1]");
  return x0 * (1.0 - x0) * std::exp(-lambda.total_mass() * t);
}

DualityReport compare(const MonteCarloEstimate& forward, const MonteCarloEstimate& dual, double z_threshold) {
  if (forward.std_error < 0.0 || dual.std_error < 0.0) throw InvalidParameter("compare: negative standard error");
  DualityReport rep;
  rep.forward = forward;
  rep.dual = dual.mean;
  rep.dual_se = dual.std_error;
  rep.threshold = z_threshold;
  const double se = std::hypot(forward.std_error, dual.std_error);
  const double diff = std::abs(forward.mean - dual.mean);
  if (se > 0.0) {
    rep.z_score = diff / se;
  } else if (diff == 0.0) {
    rep.z_score = 0.0;
  } else {
    rep.z_score = std::numeric_limits<double>::infinity();
    rep.hard_fail = true;
  }
  // Inclusive threshold, tolerant of rounding in the difference itself.
  rep.pass = !rep.hard_fail && rep.z_score <= z_threshold * (1.0 + 1e-12);
  return rep;
}

DualityReport compare(const MonteCarloEstimate& forward, double dual, double z_threshold) {
  return compare(forward, MonteCarloEstimate{dual, 0.0, 0}, z_threshold);
}

nlohmann::json DualityReport::to_json() const {
  nlohmann::json j = provenance;
  j["forward"] = {{"mean", forward.mean}, {"se", forward.std_error}, {"n", forward.n_samples}};
  j["dual"] = dual;
  j["dual_se"] = dual_se;
  j["z"] = std::isfinite(z_score) ? nlohmann::json(z_score) : nlohmann::json("inf");
  j["threshold"] = threshold;
  j["pass"] = pass;
  j["hard_fail"] = hard_fail;
  j["extinction_frac"] = extinction_frac;
  return j;
}

}  // namespace lbp

#include "lbp/flemingviot.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "lbp/error.hpp"
#include "lbp/kernels.hpp"
#include "lbp/special.hpp"

namespace lbp {
namespace {

constexpr std::size_t kChunk = 4096;

void check_common(double x0, double dt, std::span<const double> obs_times, double horizon) {
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw InvalidParameter("frequency process: x0 must lie in [0, 1]");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("frequency process: dt must be positive");
  if (!(horizon >= 0.0)) throw InvalidParameter("frequency process: horizon must be >= 0");
  for (std::size_t i = 0; i < obs_times.size(); ++i) {
    if (!(obs_times[i] >= 0.0 && obs_times[i] <= horizon)) {
      throw InvalidParameter("frequency process: observation times must lie in [0, horizon]");
    }
    if (i > 0 && !(obs_times[i] > obs_times[i - 1])) {
      throw InvalidParameter("frequency process: observation times must be strictly increasing");
    }
  }
}

// Draws v = (1-u)/u from the density proportional to v^(alpha-1) on [0, max_ratio].
double draw_ratio(const TruncatedLambda& t, double inv_alpha, Rng& rng) {
  const double w = rng.uniform_pos();
  return t.max_ratio * (t.alpha == 1.0 ? w : std::pow(w, inv_alpha));
}

// A chunk of paths advanced in lockstep, in one or more layers. Each layer
// has its own jump floor (>= the drive floor) and compensating diffusion
// rate; all layers consume the same normals and the same Poisson points, so
// they are coupled through common random numbers. Normals come from
// `diffusion_rng` and jump clocks/marks from `jump_rng`.
class Batch {
 public:
  struct Layer {
    double diffusion_rate;
    double apply_ratio;  // jumps with v above this are below the layer's floor
  };

  Batch(std::size_t n, double x0, std::vector<Layer> layers, const TruncatedLambda* drive, Rng diffusion_rng,
        Rng jump_rng)
      : layers_(std::move(layers)),
        x_(layers_.size(), std::vector<double>(n, x0)),
        z_(n),
        drive_(drive),
        inv_alpha_(drive ? 1.0 / drive->alpha : 1.0),
        diffusion_rng_(diffusion_rng),
        jump_rng_(jump_rng) {
    if (drive_ != nullptr) {
      next_jump_.resize(n);
      for (double& t : next_jump_) t = jump_rng_.exponential(drive_->jump_rate);
    }
  }

  std::span<const double> values(std::size_t layer = 0) const { return x_[layer]; }
  std::size_t layers() const { return layers_.size(); }

  void advance_to(double target, double dt) {
    while (time_ < target) {
      const double t_end = (target - time_ <= dt) ? target : time_ + dt;
      const double h = t_end - time_;
      for (double& z : z_) z = diffusion_rng_.normal();
      for (std::size_t m = 0; m < layers_.size(); ++m) kernels::wf_step(x_[m], z_, layers_[m].diffusion_rate * h);
      if (drive_ != nullptr) apply_jumps(t_end);
      time_ = t_end;
    }
  }

 private:
  void apply_jumps(double t_end) {
    for (std::size_t i = 0; i < z_.size(); ++i) {
      while (next_jump_[i] <= t_end) {
        const double v = draw_ratio(*drive_, inv_alpha_, jump_rng_);
        const double mark = jump_rng_.uniform();
        const double u = 1.0 / (1.0 + v);
        for (std::size_t m = 0; m < layers_.size(); ++m) {
          if (v <= layers_[m].apply_ratio) x_[m][i] = jump_update(x_[m][i], u, mark < x_[m][i] ? 1.0 : 0.0);
        }
        next_jump_[i] += jump_rng_.exponential(drive_->jump_rate);
      }
    }
  }

  std::vector<Layer> layers_;
  std::vector<std::vector<double>> x_;
  std::vector<double> z_;
  std::vector<double> next_jump_;
  const TruncatedLambda* drive_;
  double inv_alpha_;
  Rng diffusion_rng_;
  Rng jump_rng_;
  double time_ = 0.0;
};

FrequencyPath run_single(double x0, double horizon, double dt, Batch::Layer layer, const TruncatedLambda* drive,
                         Rng& rng, std::span<const double> obs_times) {
  FrequencyPath path;
  path.x0 = x0;
  path.dt = dt;
  Batch batch(1, x0, {layer}, drive, Rng(rng()), Rng(rng()));
  if (obs_times.empty()) {
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    path.records.push_back({0.0, x0});
    for (std::size_t s = 1; s <= steps; ++s) {
      const double t = std::min(horizon, static_cast<double>(s) * dt);
      batch.advance_to(t, dt);
      path.records.push_back({t, batch.values()[0]});
    }
  } else {
    for (double t : obs_times) {
      batch.advance_to(t, dt);
      path.records.push_back({t, batch.values()[0]});
    }
  }
  return path;
}

template <class MakeBatch>
std::vector<EnsembleValues> run_ensemble(std::span<const double> obs_times, const EnsembleOptions& opt,
                                         std::size_t layers, MakeBatch make_batch) {
  std::vector<EnsembleValues> out(layers, EnsembleValues(obs_times.size(), std::vector<double>(opt.paths)));
  const std::size_t chunks = (opt.paths + kChunk - 1) / kChunk;
  auto work = [&](std::size_t first_chunk, std::size_t stride) {
    for (std::size_t c = first_chunk; c < chunks; c += stride) {
      const std::size_t begin = c * kChunk;
      const std::size_t n = std::min(kChunk, opt.paths - begin);
      auto batch = make_batch(n, derive_stream(opt.seed, 2 * c), derive_stream(opt.seed, 2 * c + 1));
      for (std::size_t o = 0; o < obs_times.size(); ++o) {
        batch.advance_to(obs_times[o], opt.dt);
        for (std::size_t m = 0; m < layers; ++m) {
          const auto v = batch.values(m);
          std::copy(v.begin(), v.end(), out[m][o].begin() + static_cast<std::ptrdiff_t>(begin));
        }
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(chunks)));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  return out;
}

}  // namespace

TruncatedLambda TruncatedLambda::make(const LambdaMeasure& lambda, double floor) {
  if (!(floor > 0.0 && floor < 0.5)) throw InvalidParameter("jump floor must lie in (0, 0.5)");
  TruncatedLambda t;
  t.floor = floor;
  if (const auto* b = std::get_if<BetaScaled>(&lambda.variant())) {
    t.alpha = b->alpha;
    t.scale = b->scale;
    t.diffusion_rate = b->scale * special::incomplete_beta(2.0 - b->alpha, b->alpha, floor);
  } else if (const auto* u = std::get_if<UniformScaled>(&lambda.variant())) {
    t.alpha = 1.0;
    t.scale = u->scale;
    t.diffusion_rate = u->scale * floor;
  } else {
    throw InvalidParameter("Lambda-FV jump scheme needs a Lambda without atom at 0; use the Wright-Fisher simulator");
  }
  // With v = (1-u)/u, u^-2 Lambda(du) = scale v^(alpha-1) dv on [0, (1-floor)/floor].
  t.max_ratio = (1.0 - floor) / floor;
  t.jump_rate = t.scale * std::pow(t.max_ratio, t.alpha) / t.alpha;
  return t;
}

double TruncatedLambda::sample_jump(Rng& rng) const { return 1.0 / (1.0 + draw_ratio(*this, 1.0 / alpha, rng)); }

FrequencyPath simulate_wf(double rate, double x0, double horizon, double dt, Rng& rng,
                          std::span<const double> obs_times) {
  if (!(rate > 0.0)) throw InvalidParameter("simulate_wf: rate must be positive");
  check_common(x0, dt, obs_times, horizon);
  FrequencyPath path = run_single(x0, horizon, dt, {rate, 0.0}, nullptr, rng, obs_times);
  path.generator = LambdaMeasure::kingman(rate);
  return path;
}

FrequencyPath simulate_lfv(const LambdaMeasure& lambda, double x0, double horizon, double eps, double dt, Rng& rng,
                           std::span<const double> obs_times) {
  check_common(x0, dt, obs_times, horizon);
  const TruncatedLambda trunc = TruncatedLambda::make(lambda, eps);
  FrequencyPath path = run_single(x0, horizon, dt, {trunc.diffusion_rate, trunc.max_ratio}, &trunc, rng, obs_times);
  path.generator = lambda;
  path.jump_floor = eps;
  return path;
}

EnsembleValues wf_ensemble(double rate, std::span<const double> obs_times, const EnsembleOptions& opt) {
  if (!(rate > 0.0)) throw InvalidParameter("wf_ensemble: rate must be positive");
  check_common(opt.x0, opt.dt, obs_times, obs_times.empty() ? 0.0 : obs_times.back());
  return run_ensemble(obs_times, opt, 1, [&](std::size_t n, Rng diffusion, Rng jumps) {
    return Batch(n, opt.x0, {{rate, 0.0}}, nullptr, diffusion, jumps);
  }).front();
}

std::vector<EnsembleValues> lfv_ensemble_coupled(const LambdaMeasure& lambda, std::span<const double> floors,
                                                 std::span<const double> obs_times, const EnsembleOptions& opt,
                                                 double drive_eps) {
  check_common(opt.x0, opt.dt, obs_times, obs_times.empty() ? 0.0 : obs_times.back());
  if (floors.empty()) throw InvalidParameter("lfv_ensemble: no jump floors");
  const TruncatedLambda drive = TruncatedLambda::make(lambda, drive_eps);
  std::vector<Batch::Layer> layers;
  for (double eps : floors) {
    if (drive_eps > eps) throw InvalidParameter("lfv_ensemble: drive floor must not exceed the jump floor");
    const TruncatedLambda applied = TruncatedLambda::make(lambda, eps);
    layers.push_back({applied.diffusion_rate, applied.max_ratio});
  }
  return run_ensemble(obs_times, opt, layers.size(), [&](std::size_t n, Rng diffusion, Rng jumps) {
    return Batch(n, opt.x0, layers, &drive, diffusion, jumps);
  });
}

EnsembleValues lfv_ensemble(const LambdaMeasure& lambda, double eps, std::span<const double> obs_times,
                            const EnsembleOptions& opt, std::optional<double> drive_eps) {
  const double floors[1] = {eps};
  return lfv_ensemble_coupled(lambda, floors, obs_times, opt, drive_eps.value_or(eps)).front();
}

}  // namespace lbp

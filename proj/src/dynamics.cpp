#include "lbp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lbp/error.hpp"

namespace lbp {

void ModelParams::validate() const {
  if (!(b > 0.0) || !std::isfinite(b)) throw InvalidParameter("model: b must be positive");
  if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidParameter("model: d must be >= 0");
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidParameter("model: c must be positive");
  if (!(K > 0.0) || !std::isfinite(K)) throw InvalidParameter("model: K must be positive");
  if (!law) throw InvalidParameter("model: offspring law missing");
  if (regime.kind == RegimeKind::Stable && !(regime.alpha > 1.0 && regime.alpha < 2.0)) {
    throw InvalidParameter("model: stable regime needs alpha in (1, 2)");
  }
  if (!law->compatible_with(regime)) {
    throw InvalidParameter("model: offspring law " + law->spec() + " does not satisfy the tail assumption of regime " +
                           to_string(regime));
  }
  if (regime.kind == RegimeKind::Neveu) {
    if (!(K >= std::numbers::e)) throw InvalidParameter("model: Neveu regime needs K >= e so that K log K >= K");
    return;
  }
  const Moment& m = law->moments().mean;
  if (!m.finite) throw InvalidParameter("model: offspring mean must be finite in this regime");
  if (!(b * m.value > d)) throw InvalidParameter("model: process must be supercritical (b m > d)");
}

RegimeScaling regime_scaling(const ModelParams& params) {
  params.validate();
  RegimeScaling s;
  const Moments& mo = params.law->moments();
  switch (params.regime.kind) {
    case RegimeKind::FiniteVariance:
      s.time_factor = params.K;
      s.size_factor = params.K;
      s.n_star = (params.b * mo.mean.value - params.d) / params.c;
      s.effective_size = s.n_star / (params.b * (mo.mean.value + mo.second.value));
      break;
    case RegimeKind::Stable:
      s.time_factor = std::pow(params.K, params.regime.alpha - 1.0);
      s.size_factor = params.K;
      s.n_star = (params.b * mo.mean.value - params.d) / params.c;
      break;
    case RegimeKind::Neveu:
      s.time_factor = 1.0;
      s.size_factor = params.K * std::log(params.K);
      s.n_star = params.b * *params.law->p0_tail() / params.c;
      break;
  }
  return s;
}

PopulationState::PopulationState(std::vector<std::int64_t> counts, double raw_time)
    : counts_(std::move(counts)), index_(counts_.size()), time_(raw_time) {
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] < 0) throw InvalidParameter("population state: negative count");
    total_ += counts_[i];
    index_.add(i, counts_[i]);
  }
}

void PopulationState::add(std::size_t type, std::int64_t delta) {
  counts_[type] += delta;
  total_ += delta;
  index_.add(type, delta);
}

bool PopulationState::audit() const {
  std::int64_t running = 0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] < 0) return false;
    running += counts_[i];
    if (index_.prefix(i + 1) != running) return false;
  }
  return running == total_;
}

PopulationState equilibrium_state(const RegimeScaling& scaling, std::span<const double> fractions) {
  if (fractions.empty()) throw InvalidParameter("initial state: no types");
  const auto total = static_cast<std::int64_t>(std::floor(scaling.size_factor * scaling.n_star));
  if (total < 1) throw InvalidParameter("initial state: size_factor * n_star < 1");
  std::vector<std::int64_t> counts(fractions.size(), 0);
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i + 1 < fractions.size(); ++i) {
    if (!(fractions[i] >= 0.0)) throw InvalidParameter("initial state: negative fraction");
    counts[i] = std::min(total - assigned, static_cast<std::int64_t>(std::llround(fractions[i] * static_cast<double>(total))));
    assigned += counts[i];
  }
  counts.back() = total - assigned;
  return PopulationState(std::move(counts));
}

EventRecord draw_event(const PopulationState& state, const ModelParams& params, Rng& rng) {
  const std::int64_t n_int = state.total();
  if (n_int <= 0) throw AbsorbingState("step: population is extinct");
  const double n = static_cast<double>(n_int);
  const double birth = params.b * n;
  const double death = (params.d + params.c_K() * n) * n;
  const double total = birth + death;

  EventRecord ev;
  ev.wait = rng.exponential(total);
  if (rng.uniform() * total < birth) {
    ev.kind = EventRecord::Kind::Birth;
    ev.type = state.pick_type(rng);
    ev.offspring = params.law->sample(rng);
  } else {
    ev.kind = EventRecord::Kind::Death;
    ev.type = state.pick_type(rng);
  }
  return ev;
}

void apply_event(PopulationState& state, const EventRecord& event) {
  if (event.kind == EventRecord::Kind::Birth) {
    state.add(event.type, static_cast<std::int64_t>(event.offspring));
  } else {
    state.add(event.type, -1);
  }
  state.advance(event.wait);
}

EventRecord step(PopulationState& state, const ModelParams& params, Rng& rng) {
  EventRecord ev = draw_event(state, params, rng);
  apply_event(state, ev);
  return ev;
}

std::vector<double> frequency(const PopulationState& state) {
  std::vector<double> f(state.num_types(), 0.0);
  if (state.total() <= 0) {
    if (!f.empty()) f[0] = 1.0;
    return f;
  }
  const double n = static_cast<double>(state.total());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(state.counts()[i]) / n;
  return f;
}

Trajectory simulate(const ModelParams& params, PopulationState init, double horizon_scaled,
                    std::span<const double> obs_times, Rng& rng) {
  Trajectory traj;
  traj.params = params;
  traj.scaling = regime_scaling(params);
  if (init.total() < 1) throw InvalidParameter("simulate: initial population is empty");
  if (!(horizon_scaled >= 0.0)) throw InvalidParameter("simulate: horizon must be >= 0");
  for (std::size_t i = 0; i < obs_times.size(); ++i) {
    if (!(obs_times[i] >= 0.0 && obs_times[i] <= horizon_scaled)) {
      throw InvalidParameter("simulate: observation times must lie in [0, horizon]");
    }
    if (i > 0 && !(obs_times[i] > obs_times[i - 1])) {
      throw InvalidParameter("simulate: observation times must be strictly increasing");
    }
  }

  const double tf = traj.scaling.time_factor;
  const double sf = traj.scaling.size_factor;
  const double horizon_raw = tf * horizon_scaled;
  PopulationState state = std::move(init);
  traj.records.reserve(obs_times.size());
  std::size_t next_obs = 0;

  auto record = [&](double t_scaled) {
    traj.records.push_back({t_scaled, static_cast<double>(state.total()) / sf, frequency(state)});
  };

#ifndef NDEBUG
  constexpr std::uint64_t kAuditMask = (std::uint64_t{1} << 16) - 1;
#endif
  while (state.total() > 0) {
    const EventRecord ev = draw_event(state, params, rng);
    const double t_next = state.raw_time() + ev.wait;
    while (next_obs < obs_times.size() && tf * obs_times[next_obs] < t_next) {
      record(obs_times[next_obs]);
      ++next_obs;
    }
    if (t_next >= horizon_raw) break;
    apply_event(state, ev);
    ++traj.events;
#ifndef NDEBUG
    if ((traj.events & kAuditMask) == 0 && !state.audit()) {
      throw std::logic_error("simulate: population index out of sync with counts");
    }
#endif
    if (state.total() == 0) traj.extinction_time = state.raw_time() / tf;
  }
  while (next_obs < obs_times.size()) record(obs_times[next_obs++]);
  return traj;
}

OccupationStats occupation_stats(const Trajectory& traj, double eps, double n_star) {
  const auto& rec = traj.records;
  if (rec.empty()) throw InvalidParameter("occupation_stats: empty trajectory");
  OccupationStats out;
  for (const auto& r : rec) out.sup_dev = std::max(out.sup_dev, std::abs(r.n_bar - n_star));
  const double span = rec.back().scaled_time - rec.front().scaled_time;
  if (!(span > 0.0)) {
    out.frac_outside = std::abs(rec.front().n_bar - n_star) > eps ? 1.0 : 0.0;
    return out;
  }
  double outside = 0.0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i) {
    if (std::abs(rec[i].n_bar - n_star) > eps) outside += rec[i + 1].scaled_time - rec[i].scaled_time;
  }
  out.frac_outside = outside / span;
  return out;
}

double lyapunov(double n, double n_star) {
  if (!(n > 0.0)) throw InvalidParameter("lyapunov: n must be positive");
  if (!(n_star > 0.0)) throw InvalidParameter("lyapunov: n_star must be positive");
  const double r = n / n_star;
  return r - 1.0 - std::log(r);
}

double logistic_flow(double n0, double t, const ModelParams& params) {
  if (!(n0 > 0.0)) throw InvalidParameter("logistic_flow: n0 must be positive");
  if (!(t >= 0.0)) throw InvalidParameter("logistic_flow: t must be >= 0");
  if (!params.law || !params.law->moments().mean.finite) {
    throw InvalidParameter("logistic_flow: offspring mean must be finite");
  }
  const double r = params.b * params.law->moments().mean.value - params.d;
  if (!(r > 0.0)) throw InvalidParameter("logistic_flow: needs b m > d");
  const double n_star = r / params.c;
  const double decay = std::exp(-r * t);
  return n_star * n0 / (n_star * decay + n0 * (1.0 - decay));
}

}  // namespace lbp

#include "lbp/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lbp/error.hpp"
#include "lbp/kernels.hpp"
#include "lbp/special.hpp"

namespace lbp {
namespace {

constexpr double kPgfTolerance = 1e-13;
constexpr std::uint64_t kPgfMaxTerms = std::uint64_t{1} << 28;
constexpr std::size_t kPgfChunk = 4096;
// Tail draws at or beyond 2^62 are redrawn; their mass is below 1e-18 for
// every exponent the regimes use.
constexpr double kMaxOffspring = 4611686018427387904.0;

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(const Regime& regime) {
  switch (regime.kind) {
    case RegimeKind::FiniteVariance:
      return "finite_variance";
    case RegimeKind::Stable:
      return "stable:" + format_double(regime.alpha);
    case RegimeKind::Neveu:
      return "neveu";
  }
  return "unknown";
}

AliasTable::AliasTable(std::span<const double> weights) {
  const std::size_t n = weights.size();
  if (n == 0) throw InvalidParameter("alias table needs at least one weight");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw InvalidParameter("alias table weights must have positive sum");

  threshold_.assign(n, 1.0);
  alias_.resize(n);
  std::vector<double> scaled(n);
  std::vector<std::size_t> small;
  std::vector<std::size_t> large;
  for (std::size_t i = 0; i < n; ++i) {
    alias_[i] = i;
    scaled[i] = weights[i] * static_cast<double>(n) / total;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back();
    small.pop_back();
    const std::size_t l = large.back();
    threshold_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (std::size_t i : small) threshold_[i] = 1.0;
  for (std::size_t i : large) threshold_[i] = 1.0;
}

OffspringLaw OffspringLaw::zeta(double alpha_tail, std::size_t cut) {
  if (!(alpha_tail > 0.0) || !std::isfinite(alpha_tail)) {
    throw InvalidParameter("zeta law: tail exponent must be positive");
  }
  if (cut == 0) throw InvalidParameter("zeta law: head cut must be positive");

  OffspringLaw law;
  law.kind_ = Kind::Zeta;
  law.alpha_ = alpha_tail;
  const double s = 1.0 + alpha_tail;
  law.normalizer_ = special::zeta(s);
  law.head_.resize(cut);
  for (std::size_t k = 1; k <= cut; ++k) {
    law.head_[k - 1] = std::pow(static_cast<double>(k), -s) / law.normalizer_;
  }
  law.tail_mass_ = special::zeta_tail(s, cut + 1) / law.normalizer_;
  law.tail_bound_ = std::pow(1.0 + 1.0 / static_cast<double>(cut + 1), s) / alpha_tail;

  std::vector<double> bins(law.head_);
  bins.push_back(law.tail_mass_);
  law.table_ = AliasTable(bins);

  const double z = law.normalizer_;
  Moments& mo = law.moments_;
  mo.mean = alpha_tail > 1.0 ? Moment::of(special::zeta(alpha_tail) / z) : Moment::infinite();
  mo.second = alpha_tail > 2.0 ? Moment::of(special::zeta(alpha_tail - 1.0) / z) : Moment::infinite();
  if (alpha_tail > 2.0) {
    mo.delta = std::min(1.0, 0.5 * (alpha_tail - 2.0));
    mo.second_plus = Moment::of(special::zeta(alpha_tail - 1.0 - mo.delta) / z);
  } else {
    mo.delta = 1.0;
    mo.second_plus = Moment::infinite();
  }
  return law;
}

OffspringLaw OffspringLaw::explicit_pmf(std::span<const double> pmf) {
  if (pmf.empty()) throw InvalidParameter("explicit pmf: empty table");
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidParameter("explicit pmf: entries must be finite and >= 0");
    total += p;
  }
  if (!(total > 0.0)) throw InvalidParameter("explicit pmf: all entries are zero");

  OffspringLaw law;
  law.kind_ = Kind::ExplicitPmf;
  law.head_.assign(pmf.begin(), pmf.end());
  for (double& p : law.head_) p /= total;
  // Trailing zeros carry no information.
  while (law.head_.size() > 1 && law.head_.back() == 0.0) law.head_.pop_back();
  law.tail_mass_ = 0.0;
  law.table_ = AliasTable(law.head_);

  double m = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  for (std::size_t i = 0; i < law.head_.size(); ++i) {
    const double k = static_cast<double>(i + 1);
    m += k * law.head_[i];
    m2 += k * k * law.head_[i];
    m3 += k * k * k * law.head_[i];
  }
  law.moments_.mean = Moment::of(m);
  law.moments_.second = Moment::of(m2);
  law.moments_.second_plus = Moment::of(m3);
  law.moments_.delta = 1.0;
  return law;
}

double OffspringLaw::tail_exponent() const {
  if (kind_ != Kind::Zeta) throw UnsupportedOperation("tail exponent is defined for zeta laws only");
  return alpha_;
}

std::optional<double> OffspringLaw::p0_tail() const {
  if (kind_ != Kind::Zeta) return std::nullopt;
  return 1.0 / normalizer_;
}

double OffspringLaw::probability(std::uint64_t k) const {
  if (k == 0) return 0.0;
  if (kind_ == Kind::ExplicitPmf) return k <= head_.size() ? head_[k - 1] : 0.0;
  if (k <= head_.size()) return head_[k - 1];
  return std::pow(static_cast<double>(k), -(1.0 + alpha_)) / normalizer_;
}

std::uint64_t OffspringLaw::sample(Rng& rng) const {
  const std::size_t bin = table_.sample(rng);
  if (bin < head_.size()) return bin + 1;
  return sample_tail(rng);
}

// Exact draw from p_k restricted to k > cut: propose k = floor(Y) with Y
// Pareto(alpha) on [cut+1, inf), accept with probability
// p_k / (tail_bound * P(floor(Y) = k)), which is <= 1.
std::uint64_t OffspringLaw::sample_tail(Rng& rng) const {
  const double start = static_cast<double>(head_.size() + 1);
  for (;;) {
    const double y = start * std::pow(rng.uniform_pos(), -1.0 / alpha_);
    if (!(y < kMaxOffspring)) continue;
    const double k = std::floor(y);
    // k^-(1+a) / (k^-a - (k+1)^-a) = 1 / (k (1 - (1 + 1/k)^-a))
    const double ratio = 1.0 / (k * -std::expm1(-alpha_ * std::log1p(1.0 / k)));
    if (rng.uniform() * tail_bound_ < ratio) return static_cast<std::uint64_t>(k);
  }
}

double OffspringLaw::pgf(double s) const {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidParameter("pgf: s must lie in [0, 1]");
  if (s == 0.0) return 0.0;
  if (kind_ == Kind::ExplicitPmf) return kernels::weighted_power_sum(head_, s, 1);
  if (s == 1.0) return 1.0;

  double value = kernels::weighted_power_sum(head_, s, 1);
  const double sigma = 1.0 + alpha_;
  std::vector<double> chunk(kPgfChunk);
  std::uint64_t next = head_.size() + 1;
  for (;;) {
    // sum_{j >= next} s^j p_j <= s^next * int_{next-1}^inf y^-(1+a) dy / Z
    const double bound = std::pow(s, static_cast<double>(next)) *
                         std::pow(static_cast<double>(next - 1), -alpha_) / (alpha_ * normalizer_);
    if (bound < kPgfTolerance) break;
    if (next > kPgfMaxTerms) {
      throw UnsupportedOperation("pgf: s too close to 1 for a rigorous truncation");
    }
    for (std::size_t i = 0; i < kPgfChunk; ++i) {
      chunk[i] = std::exp(-sigma * std::log(static_cast<double>(next + i))) / normalizer_;
    }
    value += kernels::weighted_power_sum(chunk, s, static_cast<int>(next));
    next += kPgfChunk;
  }
  return value;
}

double OffspringLaw::tail_function(double y) const {
  if (kind_ != Kind::Zeta) throw UnsupportedOperation("tail function is defined for zeta laws only");
  if (!(y >= 1.0)) throw InvalidParameter("tail function: y must be >= 1");
  const double k = std::floor(y);
  return std::pow(y / k, 1.0 + alpha_) / normalizer_;
}

bool OffspringLaw::compatible_with(const Regime& regime) const {
  switch (regime.kind) {
    case RegimeKind::FiniteVariance:
      return moments_.second_plus.finite;
    case RegimeKind::Stable:
      return kind_ == Kind::Zeta && regime.alpha > 1.0 && regime.alpha < 2.0 &&
             std::abs(alpha_ - regime.alpha) < 1e-12;
    case RegimeKind::Neveu:
      return kind_ == Kind::Zeta && alpha_ == 1.0;
  }
  return false;
}

std::string OffspringLaw::spec() const {
  if (kind_ == Kind::Zeta) return "zeta:" + format_double(alpha_);
  std::string out = "pmf:";
  for (std::size_t i = 0; i < head_.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(head_[i]);
  }
  return out;
}

OffspringLaw parse_offspring_law(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw InvalidParameter("offspring law '" + text + "': expected <kind>:<params>");
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  auto to_double = [&](const std::string& tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) throw InvalidParameter("offspring law '" + text + "': bad number '" + tok + "'");
    return v;
  };
  if (kind == "zeta") return OffspringLaw::zeta(to_double(rest));
  if (kind == "pmf") {
    std::vector<double> pmf;
    std::stringstream ss(rest);
    std::string tok;
    while (std::getline(ss, tok, ',')) pmf.push_back(to_double(tok));
    return OffspringLaw::explicit_pmf(pmf);
  }
  throw InvalidParameter("offspring law '" + text + "': unknown kind '" + kind + "'");
}

bool nonexplosion_check(const OffspringLaw& law, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidParameter("nonexplosion_check: eps must lie in (0, 1)");
  const double start = std::min(eps, 0.5);
  double lowest = std::max(start / 2048.0, 1e-6);
  if (lowest >= start) lowest = start / 8.0;

  std::vector<double> log_u;
  std::vector<double> log_r;
  bool identity = true;
  for (double u = start; u >= lowest * (1.0 - 1e-12); u *= 0.5) {
    const double s = 1.0 - u;
    const double gap = std::abs(law.pgf(s) - s);
    if (gap > 1e-14) identity = false;
    if (gap > 0.0) {
      log_u.push_back(std::log(u));
      log_r.push_back(std::log(u * std::log(1.0 / u) / gap));
    }
  }
  if (identity) return true;

  // Least-squares slope of log r against log u over the finest half of the grid.
  const std::size_t half = log_u.size() / 2;
  const std::size_t n = log_u.size() - half;
  if (n < 2) return true;
  double mu = 0.0;
  double mr = 0.0;
  for (std::size_t i = half; i < log_u.size(); ++i) {
    mu += log_u[i];
    mr += log_r[i];
  }
  mu /= static_cast<double>(n);
  mr /= static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = half; i < log_u.size(); ++i) {
    sxy += (log_u[i] - mu) * (log_r[i] - mr);
    sxx += (log_u[i] - mu) * (log_u[i] - mu);
  }
  const double slope = sxy / sxx;
  // r(u) = u log(1/u) / |h(1-u) - (1-u)| bounded away from 0 keeps the
  // integral divergent; r ~ u^beta with beta clearly positive does not.
  return slope <= 0.2;
}

}  // namespace lbp

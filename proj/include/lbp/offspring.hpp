#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lbp/random.hpp"
#include "lbp/regime.hpp"

namespace lbp {

/// A moment that is either a finite number or +infinity. Infinite moments
/// are never encoded as large floats.
struct Moment {
  bool finite = false;
  double value = 0.0;

  static Moment of(double v) { return {true, v}; }
  static Moment infinite() { return {false, 0.0}; }
};

struct Moments {
  Moment mean;         // m = sum k p_k
  Moment second;       // m_(2) = sum k^2 p_k
  Moment second_plus;  // sum k^(2+delta) p_k
  double delta = 1.0;  // exponent excess used for `second_plus`
};

/// Walker/Vose alias table over a finite set of weights.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t sample(Rng& rng) const {
    const std::size_t i = static_cast<std::size_t>(rng.below(threshold_.size()));
    return rng.uniform() < threshold_[i] ? i : alias_[i];
  }
  std::size_t size() const { return threshold_.size(); }

 private:
  std::vector<double> threshold_;
  std::vector<std::size_t> alias_;
};

/// Offspring distribution (p_k)_{k >= 1}. Immutable after construction.
class OffspringLaw {
 public:
  enum class Kind { ExplicitPmf, Zeta };

  static constexpr std::size_t kDefaultCut = 4096;

  /// p_k = k^-(1+alpha_tail) / zeta(1+alpha_tail), k >= 1.
  static OffspringLaw zeta(double alpha_tail, std::size_t cut = kDefaultCut);

  /// Finite table p_1..p_kmax, normalized on construction.
  static OffspringLaw explicit_pmf(std::span<const double> pmf);

  Kind kind() const { return kind_; }

  /// Tail exponent alpha of a zeta law. Throws UnsupportedOperation otherwise.
  double tail_exponent() const;

  /// lim k^(1+alpha) p_k for zeta laws, empty for explicit tables.
  std::optional<double> p0_tail() const;

  /// Exact p_k.
  double probability(std::uint64_t k) const;

  /// p_1..p_cut (or the whole table for an explicit pmf).
  std::span<const double> head_table() const { return head_; }
  double tail_mass() const { return tail_mass_; }

  const Moments& moments() const { return moments_; }

  std::uint64_t sample(Rng& rng) const;

  /// Generating function h(s) = sum s^k p_k for s in [0, 1], truncation error < 1e-12.
  double pgf(double s) const;

  /// y^(1+alpha) p_floor(y), zeta laws only, y >= 1.
  double tail_function(double y) const;

  /// True when the law meets the tail assumption of `regime`.
  bool compatible_with(const Regime& regime) const;

  /// Canonical text form: "zeta:<alpha>" or "pmf:<p1>,<p2>,...".
  std::string spec() const;

 private:
  OffspringLaw() = default;
  std::uint64_t sample_tail(Rng& rng) const;

  Kind kind_ = Kind::ExplicitPmf;
  double alpha_ = 0.0;
  double normalizer_ = 1.0;  // zeta(1 + alpha)
  std::vector<double> head_;
  double tail_mass_ = 0.0;
  double tail_bound_ = 0.0;  // rejection constant of the tail sampler
  AliasTable table_;
  Moments moments_;
};

/// Parses the `spec()` text form back into a law.
OffspringLaw parse_offspring_law(const std::string& text);

/// Heuristic probe of the non-explosion condition: integrates nothing, but
/// checks that 1/|h(1-u) - (1-u)| grows at least like 1/(u log(1/u)) on a
/// geometric grid u in (0, eps]. Advisory only.
bool nonexplosion_check(const OffspringLaw& law, double eps);

}  // namespace lbp

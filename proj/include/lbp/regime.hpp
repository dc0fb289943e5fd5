#pragma once

#include <string>

namespace lbp {

enum class RegimeKind { FiniteVariance, Stable, Neveu };

/// Scaling regime of the logistic branching process. `alpha` is used only by
/// the stable regime, where it must lie in (1, 2).
struct Regime {
  RegimeKind kind = RegimeKind::FiniteVariance;
  double alpha = 2.0;

  static Regime finite_variance() { return {RegimeKind::FiniteVariance, 2.0}; }
  static Regime stable(double alpha) { return {RegimeKind::Stable, alpha}; }
  static Regime neveu() { return {RegimeKind::Neveu, 1.0}; }

  friend bool operator==(const Regime&, const Regime&) = default;
};

std::string to_string(const Regime& regime);

}  // namespace lbp

#pragma once

#include <cstdint>

namespace lbp::special {

/// sum_{k >= first} k^(-s) for s > 1 and first >= 1, by direct summation of
/// the first terms and an Euler-Maclaurin remainder.
double zeta_tail(double s, std::uint64_t first);

/// Riemann zeta for s > 1.
double zeta(double s);

/// Euler beta function B(a, b), a, b > 0.
double beta(double a, double b);

/// Lower incomplete beta integral int_0^x u^(a-1) (1-u)^(b-1) du (not regularized).
double incomplete_beta(double a, double b, double x);

}  // namespace lbp::special

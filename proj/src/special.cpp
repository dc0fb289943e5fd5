#include "lbp/special.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "lbp/error.hpp"

namespace lbp::special {
namespace {

// Below this index terms are summed directly; the Euler-Maclaurin remainder
// starting there is accurate to ~1e-17 relative for all s > 1.
constexpr std::uint64_t kDirectTerms = 64;

double euler_maclaurin_tail(double s, double n) {
  const double f = std::pow(n, -s);
  double result = n * f / (s - 1.0) + 0.5 * f;
  // -sum B_{2j}/(2j)! f^{(2j-1)}(n), with f^{(m)}(x) = (-1)^m s(s+1)...(s+m-1) x^{-s-m}.
  const double b2j_over_fact[] = {1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0, -1.0 / 1209600.0};
  double rising = s;  // s (s+1) ... (s + 2j - 2)
  double power = f / n;
  for (int j = 0; j < 4; ++j) {
    result += b2j_over_fact[j] * rising * power;
    rising *= (s + 2 * j + 1) * (s + 2 * j + 2);
    power /= n * n;
  }
  return result;
}

}  // namespace

double zeta_tail(double s, std::uint64_t first) {
  if (!(s > 1.0)) throw InvalidParameter("zeta_tail: s must exceed 1");
  if (first == 0) throw InvalidParameter("zeta_tail: first index must be >= 1");
  const std::uint64_t switch_at = first < kDirectTerms ? kDirectTerms : first;
  double direct = 0.0;
  // Smallest terms first.
  for (std::uint64_t k = switch_at; k-- > first;) direct += std::pow(static_cast<double>(k), -s);
  return euler_maclaurin_tail(s, static_cast<double>(switch_at)) + direct;
}

double zeta(double s) { return zeta_tail(s, 1); }

double beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidParameter("beta: arguments must be positive");
  return boost::math::beta(a, b);
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidParameter("incomplete_beta: arguments must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidParameter("incomplete_beta: x must lie in [0, 1]");
  return boost::math::beta(a, b, x);
}

}  // namespace lbp::special

#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace lbp::kernels::detail {
namespace {

void wf_step_avx2(double* x, const double* z, double rate_dt, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d rdt = _mm256_set1_pd(rate_dt);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xi = _mm256_loadu_pd(x + i);
    const __m256d zi = _mm256_loadu_pd(z + i);
    const __m256d v = _mm256_mul_pd(_mm256_mul_pd(xi, _mm256_sub_pd(one, xi)), rdt);
    const __m256d y = _mm256_add_pd(xi, _mm256_mul_pd(_mm256_sqrt_pd(v), zi));
    // max(0, min(1, y)) with the scalar operand order so NaN handling matches std::min/max.
    const __m256d lo = _mm256_min_pd(y, one);
    _mm256_storeu_pd(x + i, _mm256_max_pd(lo, zero));
  }
  for (; i < n; ++i) {
    const double xi = x[i];
    const double v = (xi * (1.0 - xi)) * rate_dt;
    const double y = xi + std::sqrt(v) * z[i];
    x[i] = y < 1.0 ? (y > 0.0 ? y : 0.0) : 1.0;
  }
}

inline double hsum_pairwise(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

void power_sums_avx2(const double* x, std::size_t n, int max_power, double* sums,
                     double* sq_sums) {
  const std::size_t full = n - n % 4;
  for (int p = 0; p < max_power; ++p) {
    __m256d acc = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    for (std::size_t i = 0; i < full; i += 4) {
      const __m256d xi = _mm256_loadu_pd(x + i);
      __m256d v = xi;
      for (int q = 0; q < p; ++q) v = _mm256_mul_pd(v, xi);
      acc = _mm256_add_pd(acc, v);
      acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(v, v));
    }
    alignas(32) double a[4];
    alignas(32) double a2[4];
    _mm256_store_pd(a, acc);
    _mm256_store_pd(a2, acc2);
    for (std::size_t i = full; i < n; ++i) {
      double v = x[i];
      for (int q = 0; q < p; ++q) v = v * x[i];
      a[i - full] += v;
      a2[i - full] += v * v;
    }
    sums[p] += (a[0] + a[1]) + (a[2] + a[3]);
    sq_sums[p] += (a2[0] + a2[1]) + (a2[2] + a2[3]);
  }
}

double weighted_power_sum_avx2(const double* w, std::size_t n, double s, int first_exponent) {
  alignas(32) double init[4];
  init[0] = std::pow(s, first_exponent);
  for (int l = 1; l < 4; ++l) init[l] = init[l - 1] * s;
  __m256d pw = _mm256_load_pd(init);
  const __m256d s4 = _mm256_set1_pd((s * s) * (s * s));
  __m256d acc = _mm256_setzero_pd();
  const std::size_t full = n - n % 4;
  for (std::size_t i = 0; i < full; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(w + i), pw));
    pw = _mm256_mul_pd(pw, s4);
  }
  alignas(32) double a[4];
  alignas(32) double p[4];
  _mm256_store_pd(a, acc);
  _mm256_store_pd(p, pw);
  for (std::size_t i = full; i < n; ++i) a[i - full] += w[i] * p[i - full];
  return (a[0] + a[1]) + (a[2] + a[3]);
}

}  // namespace

const KernelSet& avx2_kernel_set() noexcept {
  static const KernelSet set{"avx2", &wf_step_avx2, &power_sums_avx2, &weighted_power_sum_avx2};
  return set;
}

}  // namespace lbp::kernels::detail

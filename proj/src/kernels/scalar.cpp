#include <algorithm>
#include <cmath>

#include "kernels_impl.hpp"

namespace lbp::kernels {
namespace {

void wf_step_scalar(double* x, const double* z, double rate_dt, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double v = (xi * (1.0 - xi)) * rate_dt;
    const double y = xi + std::sqrt(v) * z[i];
    x[i] = std::max(0.0, std::min(1.0, y));
  }
}

void power_sums_scalar(const double* x, std::size_t n, int max_power, double* sums,
                       double* sq_sums) {
  for (int p = 0; p < max_power; ++p) {
    double acc[4] = {0, 0, 0, 0};
    double acc2[4] = {0, 0, 0, 0};
    const std::size_t full = n - n % 4;
    for (std::size_t i = 0; i < full; i += 4) {
      for (int l = 0; l < 4; ++l) {
        double v = x[i + l];
        for (int q = 0; q < p; ++q) v = v * x[i + l];
        acc[l] += v;
        acc2[l] += v * v;
      }
    }
    for (std::size_t i = full; i < n; ++i) {
      double v = x[i];
      for (int q = 0; q < p; ++q) v = v * x[i];
      acc[i - full] += v;
      acc2[i - full] += v * v;
    }
    sums[p] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
    sq_sums[p] += (acc2[0] + acc2[1]) + (acc2[2] + acc2[3]);
  }
}

double weighted_power_sum_scalar(const double* w, std::size_t n, double s, int first_exponent) {
  double pw[4];
  pw[0] = std::pow(s, first_exponent);
  for (int l = 1; l < 4; ++l) pw[l] = pw[l - 1] * s;
  const double s4 = (s * s) * (s * s);
  double acc[4] = {0, 0, 0, 0};
  const std::size_t full = n - n % 4;
  for (std::size_t i = 0; i < full; i += 4) {
    for (int l = 0; l < 4; ++l) {
      acc[l] += w[i + l] * pw[l];
      pw[l] = pw[l] * s4;
    }
  }
  for (std::size_t i = full; i < n; ++i) acc[i - full] += w[i] * pw[i - full];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

}  // namespace

const KernelSet& scalar_kernels() noexcept {
  static const KernelSet set{"scalar", &wf_step_scalar, &power_sums_scalar,
                             &weighted_power_sum_scalar};
  return set;
}

}  // namespace lbp::kernels

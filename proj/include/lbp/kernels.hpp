#pragma once

// Data-parallel inner loops with a scalar reference and an AVX2 variant.
//
// Both variants produce bit-identical results: no FMA contraction, and every
// reduction is accumulated in four interleaved lanes combined as
// (l0 + l1) + (l2 + l3) regardless of the instruction set. Runtime
// dispatch therefore never changes simulation output.

#include <cstddef>
#include <span>
#include <string_view>

namespace lbp::kernels {

/// One Euler-Maruyama step of dX = sqrt(rate X (1-X)) dW for a batch of
/// paths: x <- clamp(x + sqrt(rate_dt * x * (1 - x)) * z, 0, 1).
/// `z` holds standard normals, one per path. 0 and 1 are absorbing.
using WfStepFn = void (*)(double* x, const double* z, double rate_dt, std::size_t n);

/// For p = 1..max_power accumulate sums[p-1] += sum_i x_i^p and
/// sq_sums[p-1] += sum_i x_i^(2p).
using PowerSumsFn = void (*)(const double* x, std::size_t n, int max_power, double* sums,
                             double* sq_sums);

/// sum_k w[k] * s^(k + first_exponent).
using WeightedPowerSumFn = double (*)(const double* w, std::size_t n, double s,
                                      int first_exponent);

struct KernelSet {
  std::string_view name;
  WfStepFn wf_step;
  PowerSumsFn power_sums;
  WeightedPowerSumFn weighted_power_sum;
};

const KernelSet& scalar_kernels() noexcept;

/// AVX2 kernels, or nullptr when not compiled in or not supported by the CPU.
const KernelSet* avx2_kernels() noexcept;

/// Best set for this machine. Setting LBP_FORCE_SCALAR=1 in the environment
/// pins the scalar reference.
const KernelSet& active() noexcept;

inline void wf_step(std::span<double> x, std::span<const double> z, double rate_dt) {
  active().wf_step(x.data(), z.data(), rate_dt, x.size());
}

inline void power_sums(std::span<const double> x, std::span<double> sums, std::span<double> sq_sums) {
  active().power_sums(x.data(), x.size(), static_cast<int>(sums.size()), sums.data(),
                      sq_sums.data());
}

inline double weighted_power_sum(std::span<const double> w, double s, int first_exponent) {
  return active().weighted_power_sum(w.data(), w.size(), s, first_exponent);
}

}  // namespace lbp::kernels

#include <cstdlib>
#include <cstring>

#include "kernels_impl.hpp"

namespace lbp::kernels {

const KernelSet* avx2_kernels() noexcept {
#if defined(LBP_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &detail::avx2_kernel_set() : nullptr;
#else
  return nullptr;
#endif
}

const KernelSet& active() noexcept {
  static const KernelSet& chosen = [] () -> const KernelSet& {
    const char* force = std::getenv("LBP_FORCE_SCALAR");
    if (force != nullptr && std::strcmp(force, "0") != 0) return scalar_kernels();
    if (const KernelSet* k = avx2_kernels()) return *k;
    return scalar_kernels();
  }();
  return chosen;
}

}  // namespace lbp::kernels

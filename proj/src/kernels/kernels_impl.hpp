#pragma once

#include "lbp/kernels.hpp"

namespace lbp::kernels::detail {

#if defined(LBP_HAVE_AVX2)
const KernelSet& avx2_kernel_set() noexcept;
#endif

}  // namespace lbp::kernels::detail

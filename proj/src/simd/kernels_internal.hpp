#pragma once

#include "spot/simd/kernels.hpp"

namespace spot::simd::detail {

extern const Kernels kScalarKernels;
#ifdef SPOT_HAVE_AVX2
extern const Kernels kAvx2Kernels;
#endif

}  // namespace spot::simd::detail

#pragma once

#include "seadet/simd/kernels.hpp"

namespace seadet::simd::detail {

#if defined(SEADET_HAVE_AVX2)
// Defined in kernels_avx2.cpp, which is the only translation unit compiled
// with -mavx2 -mfma.
const KernelTable& avx2_table();
#endif

}  // namespace seadet::simd::detail

#pragma once

#include "pistol/kernels.hpp"

namespace pistol::kernels::detail {

extern const KernelTable kScalarTable;
#if PISTOL_HAVE_AVX2
extern const KernelTable kAvx2Table;
#endif

}  // namespace pistol::kernels::detail

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace pistol::kernels {
namespace {

const KernelTable* choose() {
  if (const char* env = std::getenv("PISTOL_KERNELS"); env && std::string_view(env) == "scalar") {
    return &scalar();
  }
  if (const KernelTable* t = avx2(); t && avx2_supported()) return t;
  return &scalar();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> table{choose()};
  return table;
}

}  // namespace

const KernelTable& scalar() { return detail::kScalarTable; }

const KernelTable* avx2() {
#if PISTOL_HAVE_AVX2
  return &detail::kAvx2Table;
#else
  return nullptr;
#endif
}

bool avx2_supported() noexcept {
#if PISTOL_HAVE_AVX2 && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

const KernelTable& set_active(const KernelTable& table) {
  return *slot().exchange(&table, std::memory_order_acq_rel);
}

}  // namespace pistol::kernels

#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"

namespace pipemdp::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& select() {
  if (const char* forced = std::getenv("PIPEMDP_KERNELS"); forced && std::string_view(forced) == "scalar") {
    return scalar();
  }
  if (const KernelTable* t = avx2()) return *t;
  return scalar();
}

}  // namespace

const KernelTable* avx2() {
  static const KernelTable* table = cpu_has_avx2() ? avx2_table() : nullptr;
  return table;
}

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace pipemdp::kernels

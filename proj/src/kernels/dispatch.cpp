#include "graspgen/kernels.hpp"

namespace grasp::kernels {

const KernelTable* avx2_kernels_impl();  // defined in kernels_avx2.cpp

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* select() {
  if (cpu_has_avx2()) {
    if (const KernelTable* t = avx2_kernels_impl()) return t;
  }
  return &scalar_kernels();
}

}  // namespace

const KernelTable* avx2_kernels() {
  return cpu_has_avx2() ? avx2_kernels_impl() : nullptr;
}

const KernelTable& active_kernels() {
  static const KernelTable* table = select();
  return *table;
}

}  // namespace grasp::kernels

#include <atomic>
#include <cstdlib>
#include <string>

#include "augsum/simd/kernels.hpp"

namespace augsum::simd {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_backend() {
  if (const char* forced = std::getenv("AUGSUM_SIMD")) {
    if (std::string(forced) == "scalar") return Backend::kScalar;
  }
  return backend_available(Backend::kAvx2) ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{
      detect_backend() == Backend::kAvx2 ? avx2_kernels() : &scalar_kernels()};
  return table;
}

}  // namespace

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return avx2_kernels() != nullptr && cpu_has_avx2();
  }
  return false;
}

Backend active_backend() {
  return active_table().load() == &scalar_kernels() ? Backend::kScalar
                                                    : Backend::kAvx2;
}

void set_backend(Backend backend) {
  if (!backend_available(backend)) backend = Backend::kScalar;
  active_table().store(backend == Backend::kAvx2 ? avx2_kernels()
                                                 : &scalar_kernels());
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

const KernelTable& kernels() { return *active_table().load(); }

}  // namespace augsum::simd

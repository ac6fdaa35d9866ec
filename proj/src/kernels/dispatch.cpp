#include <cstdlib>
#include <cstring>

#include "chainid/kernels/kernels.hpp"

namespace chainid::kernels {

bool avx2_available() {
#if defined(CHAINID_HAVE_AVX2)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa active_isa() {
  static const Isa isa = [] {
    const char* env = std::getenv("CHAINID_SIMD");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    return avx2_available() ? Isa::Avx2 : Isa::Scalar;
  }();
  return isa;
}

const char* isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

const Table& active() { return active_isa() == Isa::Avx2 ? avx2_table() : scalar_table(); }

}  // namespace chainid::kernels

#include <cstdlib>
#include <string>

#include "phop/errors.hpp"
#include "phop/simd/kernels.hpp"

namespace phop::simd {

#if defined(PHOP_HAVE_AVX2)
namespace detail {
const Kernels& avx2_table();
}
#endif

const Kernels* avx2_kernels() {
#if defined(PHOP_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return &detail::avx2_table();
#endif
  return nullptr;
}

const Kernels& active() {
  static const Kernels& chosen = []() -> const Kernels& {
    const char* env = std::getenv("PHOP_SIMD");
    const std::string want = env ? env : "auto";
    if (want == "scalar") return scalar_kernels();
    const Kernels* vec = avx2_kernels();
    if (want == "avx2") {
      if (!vec) throw Error("PHOP_SIMD=avx2 requested but AVX2 is unavailable");
      return *vec;
    }
    if (want != "auto")
      throw Error("unknown PHOP_SIMD value '" + want +
                  "' (expected scalar, avx2 or auto)");
    return vec ? *vec : scalar_kernels();
  }();
  return chosen;
}

std::vector<const Kernels*> available_kernels() {
  std::vector<const Kernels*> out{&scalar_kernels()};
  if (const Kernels* vec = avx2_kernels()) out.push_back(vec);
  return out;
}

}  // namespace phop::simd

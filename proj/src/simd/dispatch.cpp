#include <cstdlib>
#include <string>

#include "gnsp/simd.hpp"

namespace gnsp::simd {

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return "scalar";
    case Backend::kAvx2: return "avx2";
    case Backend::kNeon: return "neon";
  }
  return "unknown";
}

const Kernels* kernels_for(Backend backend) {
  switch (backend) {
    case Backend::kScalar: return &scalar_kernels();
    case Backend::kAvx2: return detail::avx2_kernels();
    case Backend::kNeon: return detail::neon_kernels();
  }
  return nullptr;
}

namespace {

const Kernels& select() {
  if (const char* env = std::getenv("GNSP_SIMD")) {
    const std::string want(env);
    for (Backend b : {Backend::kScalar, Backend::kAvx2, Backend::kNeon}) {
      if (want == to_string(b)) {
        if (const Kernels* k = kernels_for(b)) return *k;
      }
    }
  }
  if (const Kernels* k = detail::avx2_kernels()) return *k;
  if (const Kernels* k = detail::neon_kernels()) return *k;
  return scalar_kernels();
}

}  // namespace

const Kernels& active_kernels() {
  static const Kernels& chosen = select();
  return chosen;
}

}  // namespace gnsp::simd

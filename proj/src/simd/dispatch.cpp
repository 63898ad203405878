// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <stdexcept>
#include <string>

#include <spdlog/spdlog.h>

#include "duel/simd/kernels.hpp"

namespace duel::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(DUEL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(DUEL_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("kernel variant not available: " + std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(DUEL_HAVE_AVX2)
    case Isa::Avx2: return detail::avx2_table();
#endif
#if defined(DUEL_HAVE_NEON)
    case Isa::Neon: return detail::neon_table();
#endif
    default: return detail::scalar_table();
  }
}

namespace {

const KernelTable& resolve() {
  if (const char* pin = std::getenv("DUEL_ALIGN_SIMD")) {
    const std::string want(pin);
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
      if (want == isa_name(isa) && isa_available(isa)) return kernels_for(isa);
    }
    spdlog::warn("DUEL_ALIGN_SIMD={} is unknown or unavailable here; using the best available kernels", want);
  }
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (isa_available(isa)) return kernels_for(isa);
  }
  return detail::scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = resolve();
  return table;
}

}  // namespace duel::simd

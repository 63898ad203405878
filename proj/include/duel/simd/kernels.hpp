// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string_view>

/// Dense double-precision kernels behind the feature map, the reward heads and
/// the policy logits. Every kernel has a scalar reference implementation; the
/// vectorized variants are picked once at startup from the host CPU and must
/// agree with the reference to rounding error.
namespace duel::simd {

enum class Isa { Scalar, Avx2, Neon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[r] = bias[r] + sum_c w[r * cols + c] * x[c]; bias may be null.
  void (*gemv)(const double* w, std::size_t rows, std::size_t cols, const double* x,
               const double* bias, double* out);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

std::string_view isa_name(Isa isa);

/// True when the variant was compiled in and the running CPU supports it.
bool isa_available(Isa isa);

/// Kernel table for a specific ISA. Throws std::invalid_argument when the ISA is
/// not available.
const KernelTable& kernels_for(Isa isa);

/// The table used by the library. Resolved on first use: the widest available
/// ISA, unless DUEL_ALIGN_SIMD=scalar|avx2|neon pins one.
const KernelTable& active();

namespace detail {
const KernelTable& scalar_table();
#if defined(DUEL_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(DUEL_HAVE_NEON)
const KernelTable& neon_table();
#endif
}  // namespace detail

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
                 std::span<const double> x, const double* bias, std::span<double> out) {
  active().gemv(w.data(), rows, cols, x.data(), bias, out.data());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace duel::simd

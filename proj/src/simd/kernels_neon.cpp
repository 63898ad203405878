// SPDX-License-Identifier: Apache-2.0
#include <arm_neon.h>

#include "duel/simd/kernels.hpp"

namespace duel::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void gemv_neon(const double* w, std::size_t rows, std::size_t cols, const double* x,
               const double* bias, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = dot_neon(w + r * cols, x, cols);
    out[r] = bias ? bias[r] + s : s;
  }
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_n_f64(vld1q_f64(y + i), vld1q_f64(x + i), alpha));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{Isa::Neon, &dot_neon, &gemv_neon, &axpy_neon};
  return table;
}

}  // namespace duel::simd::detail

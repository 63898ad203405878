// SPDX-License-Identifier: Apache-2.0
#include "duel/simd/kernels.hpp"

namespace duel::simd::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void gemv_scalar(const double* w, std::size_t rows, std::size_t cols, const double* x,
                 const double* bias, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = dot_scalar(w + r * cols, x, cols);
    out[r] = bias ? bias[r] + s : s;
  }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::Scalar, &dot_scalar, &gemv_scalar, &axpy_scalar};
  return table;
}

}  // namespace duel::simd::detail

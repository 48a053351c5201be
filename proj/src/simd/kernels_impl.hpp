#pragma once

#include <cstddef>

namespace fairdyn::simd {

#define FAIRDYN_KERNEL_DECLS                                                               \
  double dot(const double* x, const double* y, std::size_t n);                             \
  void axpy(double alpha, const double* x, double* y, std::size_t n);                      \
  void dense(const double* x, std::size_t rows, std::size_t in, const double* w,           \
             const double* bias, std::size_t out, double* y);                              \
  void softsign(const double* x, double* y, std::size_t n);                                \
  void softsign_backward(const double* y, const double* gy, double* gx, std::size_t n);

namespace scalar {
FAIRDYN_KERNEL_DECLS
}
namespace avx2 {
FAIRDYN_KERNEL_DECLS
}

#undef FAIRDYN_KERNEL_DECLS

}  // namespace fairdyn::simd

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops shared by the ensemble trainer, the planner's
// batched rollouts and the plug-in estimators. Each kernel has a scalar
// reference and (when compiled in and supported by the CPU) an AVX2/FMA
// variant; the active table is chosen once at startup and can be pinned
// with FAIRDYN_SIMD=scalar|avx2 or select_isa().
namespace fairdyn::simd {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  Isa isa;
  const char* name;

  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[r, :] = bias + x[r, :] * w for r < rows; w is in x out, row-major.
  void (*dense)(const double* x, std::size_t rows, std::size_t in, const double* w,
                const double* bias, std::size_t out, double* y);
  // y = x / (1 + |x|)
  void (*softsign)(const double* x, double* y, std::size_t n);
  // gx = gy * (1 - |y|)^2, with y the softsign output
  void (*softsign_backward)(const double* y, const double* gy, double* gx, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the variant was not compiled or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

const KernelTable& kernels();
Isa active_isa();
std::string_view isa_name(Isa isa);
// Throws Error(kInvalidArgument) if the requested variant is unavailable.
void select_isa(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return kernels().dot(x.data(), y.data(), x.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace fairdyn::simd

#include <cmath>

#include "fairdyn/simd/kernels.hpp"
#include "kernels_impl.hpp"

namespace fairdyn::simd::scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void dense(const double* x, std::size_t rows, std::size_t in, const double* w, const double* bias,
           std::size_t out, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * in;
    double* yr = y + r * out;
    for (std::size_t j = 0; j < out; ++j) yr[j] = bias[j];
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xr[i];
      const double* wi = w + i * out;
      for (std::size_t j = 0; j < out; ++j) yr[j] += xi * wi[j];
    }
  }
}

void softsign(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] / (1.0 + std::fabs(x[i]));
}

void softsign_backward(const double* y, const double* gy, double* gx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = 1.0 - std::fabs(y[i]);
    gx[i] = gy[i] * d * d;
  }
}

}  // namespace fairdyn::simd::scalar

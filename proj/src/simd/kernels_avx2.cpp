// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <cmath>

#include "kernels_impl.hpp"

namespace fairdyn::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d abs_pd(__m256d v) { return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v); }

}  // namespace

double dot(const double* x, const double* y, std::size_t n) {
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd();
  __m256d a3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), a1);
    a2 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8), a2);
    a3 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12), a3);
  }
  for (; i + 4 <= n; i += 4) a0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), a0);
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(a0, a1), _mm256_add_pd(a2, a3)));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void dense(const double* x, std::size_t rows, std::size_t in, const double* w, const double* bias,
           std::size_t out, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * in;
    double* yr = y + r * out;
    std::size_t j = 0;
    // 16 outputs per pass keeps four independent FMA chains in flight.
    for (; j + 16 <= out; j += 16) {
      __m256d c0 = _mm256_loadu_pd(bias + j);
      __m256d c1 = _mm256_loadu_pd(bias + j + 4);
      __m256d c2 = _mm256_loadu_pd(bias + j + 8);
      __m256d c3 = _mm256_loadu_pd(bias + j + 12);
      for (std::size_t i = 0; i < in; ++i) {
        const __m256d xi = _mm256_set1_pd(xr[i]);
        const double* wi = w + i * out + j;
        c0 = _mm256_fmadd_pd(xi, _mm256_loadu_pd(wi), c0);
        c1 = _mm256_fmadd_pd(xi, _mm256_loadu_pd(wi + 4), c1);
        c2 = _mm256_fmadd_pd(xi, _mm256_loadu_pd(wi + 8), c2);
        c3 = _mm256_fmadd_pd(xi, _mm256_loadu_pd(wi + 12), c3);
      }
      _mm256_storeu_pd(yr + j, c0);
      _mm256_storeu_pd(yr + j + 4, c1);
      _mm256_storeu_pd(yr + j + 8, c2);
      _mm256_storeu_pd(yr + j + 12, c3);
    }
    for (; j + 4 <= out; j += 4) {
      __m256d c = _mm256_loadu_pd(bias + j);
      for (std::size_t i = 0; i < in; ++i) {
        c = _mm256_fmadd_pd(_mm256_set1_pd(xr[i]), _mm256_loadu_pd(w + i * out + j), c);
      }
      _mm256_storeu_pd(yr + j, c);
    }
    for (; j < out; ++j) {
      double c = bias[j];
      for (std::size_t i = 0; i < in; ++i) c += xr[i] * w[i * out + j];
      yr[j] = c;
    }
  }
}

void softsign(const double* x, double* y, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_div_pd(v, _mm256_add_pd(one, abs_pd(v))));
  }
  for (; i < n; ++i) y[i] = x[i] / (1.0 + std::fabs(x[i]));
}

void softsign_backward(const double* y, const double* gy, double* gx, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(one, abs_pd(_mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(gx + i, _mm256_mul_pd(_mm256_loadu_pd(gy + i), _mm256_mul_pd(d, d)));
  }
  for (; i < n; ++i) {
    const double d = 1.0 - std::fabs(y[i]);
    gx[i] = gy[i] * d * d;
  }
}

}  // namespace fairdyn::simd::avx2

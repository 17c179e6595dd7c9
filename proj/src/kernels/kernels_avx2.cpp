// AVX2 + FMA variants. This file is compiled with -mavx2 -mfma and must only be
// entered after the dispatcher has confirmed CPU support.

#include "kernels_impl.hpp"

#include <immintrin.h>

#include <cmath>

namespace tmsqz::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// Vectorized over output samples: each tap is broadcast and applied to four
// (then one) consecutive outputs.
void fir_valid(const double* padded, const double* taps, std::size_t n_taps, double* out,
               std::size_t n_out) {
  std::size_t i = 0;
  for (; i + 8 <= n_out; i += 8) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    const double* x = padded + i;
    for (std::size_t k = 0; k < n_taps; ++k) {
      const __m256d t = _mm256_broadcast_sd(taps + k);
      acc0 = _mm256_fmadd_pd(t, _mm256_loadu_pd(x + k), acc0);
      acc1 = _mm256_fmadd_pd(t, _mm256_loadu_pd(x + k + 4), acc1);
    }
    _mm256_storeu_pd(out + i, acc0);
    _mm256_storeu_pd(out + i + 4, acc1);
  }
  for (; i + 4 <= n_out; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    const double* x = padded + i;
    for (std::size_t k = 0; k < n_taps; ++k) {
      acc = _mm256_fmadd_pd(_mm256_broadcast_sd(taps + k), _mm256_loadu_pd(x + k), acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n_out; ++i) {
    double acc = 0.0;
    const double* x = padded + i;
    for (std::size_t k = 0; k < n_taps; ++k) acc += taps[k] * x[k];
    out[i] = acc;
  }
}

void accumulate_moments(const double* x, double* sum, double* sumsq, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(sum + i, _mm256_add_pd(_mm256_loadu_pd(sum + i), v));
    _mm256_storeu_pd(sumsq + i, _mm256_fmadd_pd(v, v, _mm256_loadu_pd(sumsq + i)));
  }
  for (; i < n; ++i) {
    sum[i] += x[i];
    sumsq[i] += x[i] * x[i];
  }
}

void scale_by_sqrt(const double* z, const double* var, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_sqrt_pd(_mm256_loadu_pd(var + i));
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(z + i), s));
  }
  for (; i < n; ++i) out[i] = z[i] * std::sqrt(var[i]);
}

// Two complex values per register: [re0 im0 re1 im1]. Squares are summed
// pairwise with hadd, which yields [p0 p0' p1 p1'] lane order after permute.
void accumulate_power(const std::complex<double>* spec, double* acc, std::size_t n) {
  const double* s = reinterpret_cast<const double*>(spec);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(s + 2 * i);      // re0 im0 re1 im1
    const __m256d b = _mm256_loadu_pd(s + 2 * i + 4);  // re2 im2 re3 im3
    const __m256d sq = _mm256_hadd_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
    // hadd -> [p0, p2, p1, p3]
    const __m256d p = _mm256_permute4x64_pd(sq, 0b11011000);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), p));
  }
  for (; i < n; ++i) {
    const double re = spec[i].real();
    const double im = spec[i].imag();
    acc[i] += re * re + im * im;
  }
}

}  // namespace tmsqz::kernels::avx2

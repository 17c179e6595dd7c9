#include "kernels_impl.hpp"

#include <cmath>

namespace tmsqz::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void fir_valid(const double* padded, const double* taps, std::size_t n_taps, double* out,
               std::size_t n_out) {
  for (std::size_t i = 0; i < n_out; ++i) {
    double acc = 0.0;
    const double* x = padded + i;
    for (std::size_t k = 0; k < n_taps; ++k) acc += taps[k] * x[k];
    out[i] = acc;
  }
}

void accumulate_moments(const double* x, double* sum, double* sumsq, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    sum[i] += x[i];
    sumsq[i] += x[i] * x[i];
  }
}

void scale_by_sqrt(const double* z, const double* var, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = z[i] * std::sqrt(var[i]);
}

void accumulate_power(const std::complex<double>* spec, double* acc, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double re = spec[i].real();
    const double im = spec[i].imag();
    acc[i] += re * re + im * im;
  }
}

}  // namespace tmsqz::kernels::scalar

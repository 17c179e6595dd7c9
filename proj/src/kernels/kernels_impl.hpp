#pragma once

#include <complex>
#include <cstddef>

namespace tmsqz::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void fir_valid(const double* padded, const double* taps, std::size_t n_taps, double* out,
               std::size_t n_out);
void accumulate_moments(const double* x, double* sum, double* sumsq, std::size_t n);
void scale_by_sqrt(const double* z, const double* var, double* out, std::size_t n);
void accumulate_power(const std::complex<double>* spec, double* acc, std::size_t n);
}  // namespace scalar

#ifdef TMSQZ_HAVE_AVX2
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void fir_valid(const double* padded, const double* taps, std::size_t n_taps, double* out,
               std::size_t n_out);
void accumulate_moments(const double* x, double* sum, double* sumsq, std::size_t n);
void scale_by_sqrt(const double* z, const double* var, double* out, std::size_t n);
void accumulate_power(const std::complex<double>* spec, double* acc, std::size_t n);
}  // namespace avx2
#endif

}  // namespace tmsqz::kernels

#pragma once

// Data-parallel inner loops used by the simulation and analysis pipeline.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is chosen once at runtime from CPUID; the
// TMSQZ_ISA environment variable ("scalar" or "avx2") or set_isa() can pin it.
// Variants agree with the scalar reference to rounding (the scale kernel is
// bit-identical since vsqrtpd is correctly rounded).

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace tmsqz::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Best ISA supported by this CPU and build.
Isa detect_isa();

/// ISA currently used by the dispatching entry points.
Isa active_isa();

/// Pins the dispatch target. Throws std::invalid_argument if unsupported.
void set_isa(Isa isa);

bool isa_supported(Isa isa);

/// Function table for one ISA. Exposed so tests can run variants side by side.
struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[i] = sum_k taps[k] * padded[i + k], i < n_out; padded has n_out + n_taps - 1 values.
  void (*fir_valid)(const double* padded, const double* taps, std::size_t n_taps, double* out,
                    std::size_t n_out);
  // sum[i] += x[i]; sumsq[i] += x[i]^2
  void (*accumulate_moments)(const double* x, double* sum, double* sumsq, std::size_t n);
  // out[i] = z[i] * sqrt(var[i])
  void (*scale_by_sqrt)(const double* z, const double* var, double* out, std::size_t n);
  // acc[k] += |spec[k]|^2
  void (*accumulate_power)(const std::complex<double>* spec, double* acc, std::size_t n);
};

const KernelTable& scalar_table();

/// Returns nullptr when the variant is not compiled in or not supported by the CPU.
const KernelTable* table_for(Isa isa);

const KernelTable& active_table();

double dot(std::span<const double> a, std::span<const double> b);

/// Zero-padded 'same' FIR: out[n] = sum_k taps[k] * in[n + k - delay].
/// out.size() must equal in.size().
void fir_same(std::span<const double> in, std::span<const double> taps, std::size_t delay,
              std::span<double> out);

void accumulate_moments(std::span<const double> x, std::span<double> sum, std::span<double> sumsq);

void scale_by_sqrt(std::span<const double> z, std::span<const double> var, std::span<double> out);

void accumulate_power(std::span<const std::complex<double>> spec, std::span<double> acc);

}  // namespace tmsqz::kernels

#include "tmsqz/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "kernels_impl.hpp"

namespace tmsqz::kernels {

namespace {

constexpr KernelTable kScalar{
    &scalar::dot,           &scalar::fir_valid,        &scalar::accumulate_moments,
    &scalar::scale_by_sqrt, &scalar::accumulate_power,
};

#ifdef TMSQZ_HAVE_AVX2
constexpr KernelTable kAvx2{
    &avx2::dot,           &avx2::fir_valid,        &avx2::accumulate_moments,
    &avx2::scale_by_sqrt, &avx2::accumulate_power,
};
#endif

bool cpu_has_avx2() {
#if defined(TMSQZ_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("TMSQZ_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && cpu_has_avx2()) return Isa::avx2;
  }
  return detect_isa();
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return cpu_has_avx2();
  }
  return false;
}

Isa detect_isa() { return cpu_has_avx2() ? Isa::avx2 : Isa::scalar; }

Isa active_isa() { return current().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel ISA not supported on this host: " +
                                std::string(isa_name(isa)));
  }
  current().store(isa, std::memory_order_relaxed);
}

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* table_for(Isa isa) {
  if (!isa_supported(isa)) return nullptr;
  switch (isa) {
    case Isa::scalar:
      return &kScalar;
    case Isa::avx2:
#ifdef TMSQZ_HAVE_AVX2
      return &kAvx2;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable& active_table() { return *table_for(active_isa()); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  return active_table().dot(a.data(), b.data(), a.size());
}

void fir_same(std::span<const double> in, std::span<const double> taps, std::size_t delay,
              std::span<double> out) {
  if (out.size() != in.size()) throw std::invalid_argument("fir_same: output length mismatch");
  if (taps.empty() || delay >= taps.size()) throw std::invalid_argument("fir_same: bad delay");
  const std::size_t n = in.size();
  std::vector<double> padded(n + taps.size() - 1, 0.0);
  // padded[j] = in[j - delay]
  for (std::size_t i = 0; i < n; ++i) padded[i + delay] = in[i];
  // out[i] = sum_k taps[k] * in[i + k - delay] = sum_k taps[k] * padded[i + k]
  active_table().fir_valid(padded.data(), taps.data(), taps.size(), out.data(), n);
}

void accumulate_moments(std::span<const double> x, std::span<double> sum, std::span<double> sumsq) {
  if (sum.size() != x.size() || sumsq.size() != x.size()) {
    throw std::invalid_argument("accumulate_moments: length mismatch");
  }
  active_table().accumulate_moments(x.data(), sum.data(), sumsq.data(), x.size());
}

void scale_by_sqrt(std::span<const double> z, std::span<const double> var, std::span<double> out) {
  if (var.size() != z.size() || out.size() != z.size()) {
    throw std::invalid_argument("scale_by_sqrt: length mismatch");
  }
  active_table().scale_by_sqrt(z.data(), var.data(), out.data(), z.size());
}

void accumulate_power(std::span<const std::complex<double>> spec, std::span<double> acc) {
  if (acc.size() != spec.size()) throw std::invalid_argument("accumulate_power: length mismatch");
  active_table().accumulate_power(spec.data(), acc.data(), spec.size());
}

}  // namespace tmsqz::kernels

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "tmsqz/dsp_analysis.hpp"
#include "tmsqz/kernels.hpp"
#include "tmsqz/stats.hpp"

namespace tmsqz::dsp {

namespace {

// RAII wrapper for a real-to-complex plan. FFTW_ESTIMATE keeps the plan (and
// so the rounding) independent of timing measurements.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::span<const std::complex<double>> run(std::span<const double> x) {
    std::copy(x.begin(), x.end(), in_);
    std::fill(in_ + x.size(), in_ + n_, 0.0);
    fftw_execute(plan_);
    return {reinterpret_cast<const std::complex<double>*>(out_), n_ / 2 + 1};
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

// Per-split sums of |X_k|^2.
std::vector<std::vector<double>> split_power(const FrameSet& fs, int n_splits) {
  const auto ranges = stats::split_ranges(fs.n_frames(), static_cast<std::size_t>(n_splits));
  RealFft fft(fs.n_samples);
  std::vector<std::vector<double>> acc(ranges.size(), std::vector<double>(fs.n_samples / 2 + 1, 0.0));
  for (std::size_t s = 0; s < ranges.size(); ++s) {
    for (std::size_t f = ranges[s].first; f < ranges[s].second; ++f) {
      kernels::accumulate_power(fft.run(fs.frame(f)), acc[s]);
    }
  }
  return acc;
}

}  // namespace

SpectrumEstimate average_spectrum(const FrameSet& fs, const FrameSet& ref, int n_splits) {
  if (ref.kind != homodyne::FrameKind::vacuum_reference && &fs != &ref) {
    throw std::invalid_argument("average_spectrum: reference must be a vacuum frame set");
  }
  if (std::abs(fs.dt - ref.dt) > 1e-12 * fs.dt) {
    throw std::invalid_argument("average_spectrum: sample spacing differs from reference");
  }
  if (fs.n_samples != ref.n_samples) {
    throw std::invalid_argument("average_spectrum: frame length differs from reference");
  }
  if (fs.n_samples < 4) throw std::invalid_argument("average_spectrum: frames too short");
  if (n_splits < 1) throw std::invalid_argument("average_spectrum: n_splits must be >= 1");
  if (fs.n_frames() < static_cast<std::size_t>(n_splits) ||
      ref.n_frames() < static_cast<std::size_t>(n_splits)) {
    throw std::invalid_argument("average_spectrum: fewer frames than splits");
  }

  const auto sig = split_power(fs, n_splits);
  const auto vac = split_power(ref, n_splits);
  const std::size_t n_bins = fs.n_samples / 2 + 1;
  const std::size_t k_end = (fs.n_samples % 2 == 0) ? n_bins - 1 : n_bins;

  SpectrumEstimate out;
  const double df = 1.0 / (fs.dt * static_cast<double>(fs.n_samples));
  std::vector<double> per_split(sig.size());
  for (std::size_t k = 1; k < k_end; ++k) {
    double s_all = 0.0;
    double v_all = 0.0;
    for (std::size_t s = 0; s < sig.size(); ++s) {
      s_all += sig[s][k];
      v_all += vac[s][k];
      per_split[s] = 10.0 * std::log10(sig[s][k] / vac[s][k]);
    }
    out.freqs.push_back(static_cast<double>(k) * df);
    // Normalize by frame counts so unequal set sizes cancel.
    const double ratio = (s_all / static_cast<double>(fs.n_frames())) /
                         (v_all / static_cast<double>(ref.n_frames()));
    out.level_db.push_back(10.0 * std::log10(ratio));
    out.stderr_db.push_back(stats::split_stderr(per_split));
  }
  return out;
}

LevelEstimate band_average(const SpectrumEstimate& spec, double f_lo, double f_hi) {
  if (!(f_hi > f_lo)) throw std::invalid_argument("band_average: f_hi must exceed f_lo");
  if (spec.freqs.empty() || f_lo < spec.freqs.front() || f_hi > spec.freqs.back()) {
    throw std::invalid_argument("band_average: band outside the spectrum range");
  }
  double sum = 0.0;
  double var = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
    if (spec.freqs[k] >= f_lo && spec.freqs[k] <= f_hi) {
      sum += spec.level_db[k];
      var += spec.stderr_db[k] * spec.stderr_db[k];
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("band_average: no bins in band");
  return {sum / static_cast<double>(n), std::sqrt(var) / static_cast<double>(n)};
}

ModeSpectrum mode_spectrum(const TemporalMode& mode, double f_cut) {
  const std::size_t len = mode.weights.size();
  std::size_t n = 65536;
  while (n < 8 * len) n *= 2;
  RealFft fft(n);
  const auto spec = fft.run(mode.weights);
  const double df = 1.0 / (mode.dt * static_cast<double>(n));
  const std::size_t half = n / 2;

  // Two-sided amplitude indexed by signed bin m in (-half, half).
  std::vector<double> amp(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) amp[k] = mode.dt * std::abs(spec[k]);
  auto amp_at = [&](long m) { return amp[static_cast<std::size_t>(std::labs(m))]; };

  ModeSpectrum out;
  out.f_cut = f_cut;
  double energy = amp[0] * amp[0];
  for (std::size_t k = 1; k < half; ++k) energy += 2.0 * amp[k] * amp[k];
  energy += amp[half] * amp[half];
  out.energy = energy * df;

  const auto kmax = static_cast<long>(std::max_element(amp.begin(), amp.end()) - amp.begin());
  const double peak = amp[static_cast<std::size_t>(kmax)];
  double offset = 0.0;
  if (kmax > 0 && kmax < static_cast<long>(half)) {
    const double a = amp_at(kmax - 1), b = peak, c = amp_at(kmax + 1);
    const double denom = a - 2.0 * b + c;
    if (denom != 0.0) offset = 0.5 * (a - c) / denom;
  }
  out.peak_freq = (static_cast<double>(kmax) + offset) * df;

  auto crossing = [&](double level, long dir, const std::vector<double>& a2, bool squared) {
    auto val = [&](long m) { return squared ? a2[static_cast<std::size_t>(std::labs(m))] : amp_at(m); };
    long m = kmax;
    while (std::labs(m + dir) < static_cast<long>(half) && val(m + dir) >= level) m += dir;
    const double v0 = val(m), v1 = val(m + dir);
    const double frac = (v0 - level) / (v0 - v1);
    return (static_cast<double>(m) + static_cast<double>(dir) * frac) * df;
  };
  std::vector<double> pow2(amp.size());
  for (std::size_t k = 0; k < amp.size(); ++k) pow2[k] = amp[k] * amp[k];
  out.hwhm = 0.5 * (crossing(0.5 * peak, +1, pow2, false) - crossing(0.5 * peak, -1, pow2, false));
  out.hwhm_power =
      0.5 * (crossing(0.5 * peak * peak, +1, pow2, true) - crossing(0.5 * peak * peak, -1, pow2, true));

  // Dominant lobe: walk down from the peak to the first local minimum each side.
  long lo = kmax;
  while (std::labs(lo - 1) < static_cast<long>(half) && amp_at(lo - 1) < amp_at(lo)) --lo;
  long hi = kmax;
  while (hi + 1 < static_cast<long>(half) && amp_at(hi + 1) < amp_at(hi)) ++hi;
  double num = 0.0;
  double den = 0.0;
  for (long m = lo; m <= hi; ++m) {
    const double p = amp_at(m) * amp_at(m);
    num += static_cast<double>(m) * df * p;
    den += p;
  }
  out.center_freq = num / den;

  const bool baseband = std::abs(out.peak_freq) < f_cut;
  double wrong = 0.0;
  for (std::size_t k = 0; k <= half; ++k) {
    const double f = static_cast<double>(k) * df;
    const double w = (k == 0 || k == half) ? 1.0 : 2.0;
    if (baseband ? (f > f_cut) : (f < f_cut)) wrong += w * pow2[k];
  }
  out.out_of_band_fraction = wrong / energy;
  return out;
}

}  // namespace tmsqz::dsp

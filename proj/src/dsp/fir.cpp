#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tmsqz/dsp_analysis.hpp"
#include "tmsqz/kernels.hpp"

namespace tmsqz::dsp {

std::vector<double> design_fir_lowpass(std::size_t n_taps, double cutoff_hz, double sample_rate_hz) {
  if (n_taps == 0 || n_taps % 2 == 0) throw std::invalid_argument("fir: number of taps must be odd");
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("fir: sample rate must be > 0");
  if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate_hz)) {
    throw std::invalid_argument("fir: cutoff must be in (0, Nyquist)");
  }
  const double fc = 2.0 * cutoff_hz / sample_rate_hz;  // relative to Nyquist
  const double m = 0.5 * static_cast<double>(n_taps - 1);
  std::vector<double> h(n_taps);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_taps; ++i) {
    const double x = static_cast<double>(i) - m;
    const double arg = std::numbers::pi * fc * x;
    const double sinc = x == 0.0 ? 1.0 : std::sin(arg) / arg;
    const double window =
        n_taps == 1 ? 1.0
                    : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                             static_cast<double>(n_taps - 1));
    h[i] = fc * sinc * window;
    sum += h[i];
  }
  for (double& v : h) v /= sum;
  return h;
}

FrameSet fir_lowpass(const FrameSet& fs, std::size_t n_taps, double cutoff_hz) {
  const auto taps = design_fir_lowpass(n_taps, cutoff_hz, 1.0 / fs.dt);
  FrameSet out = fs;
  const std::size_t delay = (n_taps - 1) / 2;
  for (std::size_t f = 0; f < fs.n_frames(); ++f) {
    kernels::fir_same(fs.frame(f), taps, delay, out.frame(f));
  }
  return out;
}

}  // namespace tmsqz::dsp

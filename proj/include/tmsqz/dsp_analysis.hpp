#pragma once

// Measurement-side pipeline: noise spectra, FIR low-pass, pointwise variance,
// temporal modes and quadrature extraction, and the inversion of a
// squeezing / anti-squeezing pair into pure squeezing and loss.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tmsqz/homodyne_sim.hpp"

namespace tmsqz::dsp {

using homodyne::FrameSet;

// ---------------------------------------------------------------- spectra

struct SpectrumEstimate {
  std::vector<double> freqs;  // Hz, strictly increasing
  std::vector<double> level_db;
  std::vector<double> stderr_db;
};

/// Rectangular-window periodogram of every frame, averaged, divided bin-wise
/// by the averaged vacuum periodogram. Bins strictly between DC and Nyquist.
/// Standard errors from `n_splits` contiguous frame sets.
SpectrumEstimate average_spectrum(const FrameSet& fs, const FrameSet& ref, int n_splits = 10);

struct LevelEstimate {
  double level_db = 0.0;
  double std_error = 0.0;
};

/// Mean level over bins in [f_lo, f_hi]. SE assumes independent bins.
LevelEstimate band_average(const SpectrumEstimate& spec, double f_lo = 1e6, double f_hi = 10e6);

struct PureSqueezingEstimate {
  double pure_db = 0.0;
  double pure_db_se = 0.0;
  double loss = 0.0;
  double loss_se = 0.0;
  double r = 0.0;
  /// r is so small that the loss is essentially undetermined.
  bool low_confidence = false;
};

/// Solves A = (1-L)e^{2r} + L, S = (1-L)e^{-2r} + L for (r, L).
/// Input levels are signed dB (squeezing negative). Standard errors are
/// propagated from s_se / a_se by central differences.
PureSqueezingEstimate estimate_pure_squeezing_and_loss(double s_db, double a_db, double s_se = 0.0,
                                                       double a_se = 0.0);

// ---------------------------------------------------------------- FIR

/// Hamming-windowed sinc low-pass with unit DC gain (same design as the
/// usual firwin defaults). n_taps must be odd.
std::vector<double> design_fir_lowpass(std::size_t n_taps, double cutoff_hz, double sample_rate_hz);

/// Applies the linear-phase FIR per frame with zero padding and removes the
/// (n_taps - 1) / 2 sample group delay, so time axes are unchanged.
FrameSet fir_lowpass(const FrameSet& fs, std::size_t n_taps = 255, double cutoff_hz = 100e6);

// ---------------------------------------------------------------- variance

struct VarianceTrace {
  double dt = 1e-9;
  double t0 = 0.0;
  std::vector<double> variance;  // shot-noise units
  std::vector<double> std_error;
  double vacuum_level = 0.0;  // time-averaged raw vacuum variance used as the unit

  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

/// Across-frame variance at every time sample divided by the time-averaged
/// vacuum variance. Standard errors need at least 2 * n_splits frames and are
/// zero otherwise.
VarianceTrace pointwise_variance(const FrameSet& fs, const FrameSet& ref, int n_splits = 10);

// ---------------------------------------------------------------- modes

enum class ModeFamily { tf_mode, f1, f2, g1, g2, custom };

std::string family_name(ModeFamily f);

struct ModeParams {
  ModeFamily family = ModeFamily::tf_mode;
  double gamma = 2.5e8;   // 1/s
  double t_w = 30e-9;     // s
  double period = 0.0;    // T, s; f1, f2, g2 only
  double t_c = 0.0;       // s
  double dt = 1e-9;
};

/// Sampled mode function. weights[i] sits at t0 + i dt; sum w^2 dt = 1.
struct TemporalMode {
  double dt = 1e-9;
  double t0 = 0.0;
  std::vector<double> weights;
  ModeParams params;
  std::vector<std::string> warnings;

  double t_end() const { return t0 + static_cast<double>(weights.size() - 1) * dt; }
};

/// tf_mode: t e^{-gamma^2 t^2}. f1/f2: Gaussian gated by the half-period
/// square wave (first / second half of each period), each normalized on the
/// grid. g1 = (f1 + f2)/sqrt2, g2 = (-f1 + f2)/sqrt2. All with support
/// |t - t_c| <= t_w / 2.
TemporalMode make_mode(const ModeParams& params);

/// Wraps user weights; normalizes them.
TemporalMode custom_mode(double dt, double t0, std::vector<double> weights);

/// sum a b dt over the common grid. Throws if the grids differ in dt or are
/// not sample-aligned.
double inner_product(const TemporalMode& a, const TemporalMode& b);

/// Unnormalized q = sum w_i x(t_i) dt times ref_scale. Throws if the mode is
/// not on the frame grid or its support leaves the frame.
double extract_quadrature(std::span<const double> frame, double frame_t0, double frame_dt,
                          const TemporalMode& mode, double ref_scale = 1.0);

/// One quadrature per frame.
std::vector<double> extract_quadratures(const FrameSet& fs, const TemporalMode& mode,
                                        double ref_scale = 1.0);

/// Scale that gives the vacuum ensemble unit quadrature variance. With
/// `pool_stationary` the mode shape is slid over every non-overlapping
/// position of the reference frames and the variances are pooled, which is
/// valid because the vacuum reference is stationary.
double vacuum_ref_scale(const FrameSet& ref, const TemporalMode& mode, bool pool_stationary = false);

struct ModeSpectrum {
  double peak_freq = 0.0;    // Hz, maximum of |F|, parabolic refinement
  double center_freq = 0.0;  // Hz, centroid of |F|^2 over the dominant lobe
  double hwhm = 0.0;         // Hz, half width at half maximum of |F|
  double hwhm_power = 0.0;   // Hz, same on |F|^2
  double f_cut = 0.0;
  /// Energy with |f| > f_cut for a baseband mode, |f| < f_cut otherwise.
  double out_of_band_fraction = 0.0;
  double energy = 0.0;  // sum |F|^2 df, equals 1 by Parseval
};

ModeSpectrum mode_spectrum(const TemporalMode& mode, double f_cut = 5e6);

}  // namespace tmsqz::dsp

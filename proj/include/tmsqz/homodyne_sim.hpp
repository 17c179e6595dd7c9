#pragma once

// Stochastic homodyne records from a squeezer trajectory.
//
// The squeezing bandwidth (THz) dwarfs the detector bandwidth, so the field
// at the detector is white Gaussian noise whose instantaneous variance follows
// variance_at_phase(r(t), theta(t), loss; phi). The detector low-pass filter is
// the only dynamics applied here. Raw noise is scaled so that a vacuum run has
// unit variance after the filter.

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "tmsqz/opa_model.hpp"

namespace tmsqz::homodyne {

struct DetectorModel {
  enum class Filter { first_order, butterworth2, none };

  double bandwidth_hz = 200e6;
  Filter filter_kind = Filter::butterworth2;
  double sample_rate_hz = 1e9;
  /// Shot-noise to electronic-noise power ratio at low frequency, dB.
  /// Infinite means no electronic noise.
  double clearance_db = std::numeric_limits<double>::infinity();

  double dt() const { return 1.0 / sample_rate_hz; }
};

void validate(const DetectorModel& det);

/// Digital biquad (bilinear transform, prewarped at the cutoff).
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;
};

Biquad detector_filter(const DetectorModel& det);

/// First n samples of the detector filter impulse response.
std::vector<double> impulse_response(const DetectorModel& det, std::size_t n);

/// sum_k h[k]^2: output variance of the filter for unit white input.
double noise_gain(const DetectorModel& det);

struct LoEntry {
  double phase = 0.0;  // radians
  std::size_t n_frames = 0;
};

struct LoSchedule {
  std::vector<LoEntry> entries;

  static LoSchedule single(double phase, std::size_t n_frames) { return {{{phase, n_frames}}}; }
  /// n_phases phases spaced by step starting at 0.
  static LoSchedule uniform(std::size_t n_phases, double step, std::size_t frames_per_phase);
  std::size_t total_frames() const;
};

enum class FrameKind { signal, vacuum_reference };

/// n_frames x n_samples records, row-major. t0 is the time of sample 0
/// relative to the AWG trigger.
struct FrameSet {
  double dt = 1e-9;
  double t0 = 0.0;
  std::size_t n_samples = 0;
  std::vector<double> data;
  std::vector<double> phase_tags;
  FrameKind kind = FrameKind::signal;
  std::uint64_t rng_seed = 0;

  std::size_t n_frames() const { return phase_tags.size(); }
  std::span<const double> frame(std::size_t i) const {
    return {data.data() + i * n_samples, n_samples};
  }
  std::span<double> frame(std::size_t i) { return {data.data() + i * n_samples, n_samples}; }
  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

/// Throws std::invalid_argument if shapes are inconsistent or values non-finite.
void validate(const FrameSet& fs);

struct SimOptions {
  unsigned threads = 1;
};

/// Frames are generated in LO-schedule order; frame i of the whole set draws
/// from an RNG substream derived from (seed, kind, i), so the output does not
/// depend on the thread count.
FrameSet simulate_frames(const opa::SqueezerTrajectory& traj, const DetectorModel& det,
                         const LoSchedule& lo, std::uint64_t seed, SimOptions opts = {});

FrameSet simulate_frames(const opa::SqueezerTrajectory& traj, const DetectorModel& det, double phase,
                         std::size_t n_frames, std::uint64_t seed, SimOptions opts = {});

/// Same pipeline with r = 0.
FrameSet simulate_vacuum_reference(const DetectorModel& det, std::size_t n_samples, double t0,
                                   std::size_t n_frames, std::uint64_t seed, SimOptions opts = {});

/// Frames whose phase tag is within tol of `phase` (mod 2 pi).
FrameSet select_phase(const FrameSet& fs, double phase, double tol = 1e-9);

}  // namespace tmsqz::homodyne

#pragma once

// AWG programs, the pulse-train compiler, the voltage -> pump-power
// calibration, and the modulator (AOM) step response.

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace tmsqz::pump {

/// Sampled AWG voltage. trigger_offset_s is the time of samples_v[0]
/// relative to the start of the AWG output (t = 0).
struct AwgProgram {
  double sample_rate_hz = 1e9;
  double trigger_offset_s = 0.0;
  std::vector<double> samples_v;

  double dt() const { return 1.0 / sample_rate_hz; }
  double time_at(std::size_t i) const { return trigger_offset_s + static_cast<double>(i) * dt(); }
  double duration() const { return static_cast<double>(samples_v.size()) * dt(); }
};

struct LutPoint {
  double v = 0.0;     // |V|, volts
  double p_mw = 0.0;  // pump power, mW
};

/// Voltage -> pump power map: P = quad_coeff V^2 up to linear_limit, then a
/// measured table. gain_coeff maps power to squeezing, r = gain_coeff sqrt(P).
struct Calibration {
  double quad_coeff = 6.5 / (0.160 * 0.160);  // mW / V^2
  double linear_limit = 0.160;                // V
  std::vector<LutPoint> extended_lut;
  double gain_coeff = default_gain_coeff();  // mW^-1/2
  double max_pump_power = 6.5;               // mW

  /// Coefficient that puts 2.71 dB of pure squeezing at 6.5 mW.
  static double default_gain_coeff();

  /// Largest |V| with a defined pump power.
  double voltage_ceiling() const;

  /// Pump power for |V|. Throws std::domain_error beyond the ceiling.
  double power_at(double abs_v) const;

  /// |V| producing power p. Throws std::domain_error if unreachable.
  double voltage_for(double p_mw) const;
};

/// Throws std::invalid_argument on a malformed calibration.
void validate(const Calibration& cal);

struct Ringing {
  double frequency_hz = 250e6;
  double relative_amplitude = 0.05;
  double decay_time_s = 10e-9;
};

struct ModulatorResponse {
  enum class Kind { first_order, gaussian, ideal };

  double rise_time_10_90 = 7e-9;
  Kind kind = Kind::first_order;
  std::optional<Ringing> ringing;

  /// Time after a step until the response is within 1% and any ringing has
  /// decayed below 1% of the step.
  double settle_time() const;
};

void validate(const ModulatorResponse& resp);

enum class Quadrature { x_squeezed, p_squeezed };

struct SqueezeTarget {
  double squeezing_db = 0.0;  // pure squeezing level, dB
  Quadrature quadrature = Quadrature::x_squeezed;
};

struct Slot {
  std::optional<SqueezeTarget> target;  // nullopt = vacuum

  static Slot vacuum() { return {}; }
  static Slot squeezed(double db, Quadrature q) { return {SqueezeTarget{db, q}}; }
};

struct PulseTrainSpec {
  std::vector<Slot> slots;
  double mode_width_s = 30e-9;
  double margin_s = 50e-9;
  double sample_rate_hz = 1e9;

  double period() const { return mode_width_s + margin_s; }
};

/// Window of a slot in which the pump is settled: [start, end).
struct ModeWindow {
  double start_s = 0.0;
  double center_s = 0.0;
  double end_s = 0.0;
};

/// Piecewise-constant staircase, one level per slot: +|V| for x-squeezed,
/// -|V| for p-squeezed, 0 V for vacuum. Throws CompilationError when a target
/// exceeds the pump ceiling or calibration domain, or when the margin is too
/// short for the modulator to settle.
AwgProgram compile_pulse_train(const PulseTrainSpec& spec, const Calibration& cal,
                               const ModulatorResponse& resp);

/// Settled mode windows of a compiled train: the last mode_width of each slot.
std::vector<ModeWindow> mode_windows(const PulseTrainSpec& spec);

/// Reads slot targets back from a compiled program.
PulseTrainSpec recover_pulse_train(const AwgProgram& prog, const Calibration& cal,
                                   double mode_width_s, double margin_s);

/// Pump power in mW and pump phase (0 or pi) on a uniform grid starting at t0.
struct PowerTrace {
  double dt = 1e-9;
  double t0 = 0.0;
  std::vector<double> power_mw;
  std::vector<double> phase_rad;

  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

PowerTrace ideal_pump_power(const AwgProgram& prog, const Calibration& cal);

/// 0 where V >= 0, pi where V < 0.
std::vector<double> pump_phase_trace(const AwgProgram& prog);

struct ModulatedTrace {
  PowerTrace trace;
  std::size_t clamp_count = 0;  // samples clamped from negative power to 0
};

/// Filters the trace with the modulator step response. The kernel acts on the
/// signed power P cos(phase) so that a pump-phase inversion passes through
/// zero power; magnitude and sign give the new power and phase.
ModulatedTrace apply_modulator_response(const PowerTrace& trace, const ModulatorResponse& resp);

/// 10-90% rise time of the first rising edge in [t_begin, t_end), with the
/// low/high levels taken as the trace min/max over that window. Crossings are
/// linearly interpolated.
double measure_rise_time(const PowerTrace& trace, double t_begin, double t_end);

// Waveform builders. All start at t = 0.

/// +amplitude for the first half period, -amplitude for the second.
AwgProgram square_wave(double amplitude_v, double period_s, std::size_t n_periods,
                       double sample_rate_hz = 1e9);

AwgProgram sine_wave(double amplitude_v, double frequency_hz, double n_cycles,
                     double sample_rate_hz = 1e9);

/// Gaussian voltage pulses of the given FWHMs centred at the given times.
AwgProgram gaussian_pulses(double amplitude_v, const std::vector<double>& fwhm_s,
                           const std::vector<double>& centers_s, double duration_s,
                           double sample_rate_hz = 1e9);

/// +amplitude / -amplitude alternating every half_period_s.
AwgProgram alternating_sign(double amplitude_v, double half_period_s, double duration_s,
                            double sample_rate_hz = 1e9);

/// Linear interpolation through (time, volts) knots.
AwgProgram piecewise_linear(const std::vector<std::pair<double, double>>& knots,
                            double sample_rate_hz = 1e9);

/// Adds zero-volt samples before and after; trigger_offset shifts by -lead.
AwgProgram pad(const AwgProgram& prog, double lead_s, double trail_s);

/// Throws std::invalid_argument / std::domain_error if the program is empty,
/// has a non-positive rate, or exceeds the calibration ceiling.
void validate(const AwgProgram& prog, const Calibration& cal);

}  // namespace tmsqz::pump

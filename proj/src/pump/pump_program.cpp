#include "tmsqz/pump_program.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "tmsqz/errors.hpp"
#include "tmsqz/kernels.hpp"
#include "tmsqz/quantum_core.hpp"

namespace tmsqz::pump {

namespace {

constexpr double kPi = std::numbers::pi;
// erf-based 10-90% rise of a Gaussian step response: 2 * 1.2815516 sigma.
constexpr double kGaussianRisePerSigma = 2.0 * 1.2815515655446004;
constexpr double kCeilingSlack = 1e-9;

std::size_t to_samples(double seconds, double rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

// Knots of the piecewise-linear map beyond the linear region, starting at the
// linear limit.
std::vector<LutPoint> extended_knots(const Calibration& cal) {
  std::vector<LutPoint> knots;
  knots.push_back({cal.linear_limit, cal.quad_coeff * cal.linear_limit * cal.linear_limit});
  for (const auto& p : cal.extended_lut) {
    if (p.v > cal.linear_limit) knots.push_back(p);
  }
  return knots;
}

double interp(double x0, double y0, double x1, double y1, double x) {
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

}  // namespace

double Calibration::default_gain_coeff() { return core::r_from_pure_db(2.71) / std::sqrt(6.5); }

double Calibration::voltage_ceiling() const {
  return extended_lut.empty() ? linear_limit : std::max(linear_limit, extended_lut.back().v);
}

double Calibration::power_at(double abs_v) const {
  abs_v = std::abs(abs_v);
  if (abs_v <= linear_limit * (1.0 + kCeilingSlack)) return quad_coeff * abs_v * abs_v;
  if (abs_v > voltage_ceiling() * (1.0 + kCeilingSlack)) {
    throw std::domain_error("calibration: |V| = " + std::to_string(abs_v) +
                            " V is beyond the calibrated range");
  }
  const auto knots = extended_knots(*this);
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (abs_v <= knots[i].v) {
      return interp(knots[i - 1].v, knots[i - 1].p_mw, knots[i].v, knots[i].p_mw, abs_v);
    }
  }
  return knots.back().p_mw;
}

double Calibration::voltage_for(double p_mw) const {
  if (!(p_mw >= 0.0)) throw std::domain_error("calibration: negative power");
  const double p_lin = quad_coeff * linear_limit * linear_limit;
  if (p_mw <= p_lin * (1.0 + kCeilingSlack)) return std::min(std::sqrt(p_mw / quad_coeff), linear_limit);
  const auto knots = extended_knots(*this);
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (p_mw <= knots[i].p_mw) {
      return interp(knots[i - 1].p_mw, knots[i - 1].v, knots[i].p_mw, knots[i].v, p_mw);
    }
  }
  throw std::domain_error("calibration: power " + std::to_string(p_mw) +
                          " mW is beyond the calibrated range");
}

void validate(const Calibration& cal) {
  if (!(cal.quad_coeff > 0.0)) throw std::invalid_argument("calibration: quad_coeff must be > 0");
  if (!(cal.linear_limit > 0.0)) throw std::invalid_argument("calibration: linear_limit must be > 0");
  if (!(cal.gain_coeff > 0.0)) throw std::invalid_argument("calibration: gain_coeff must be > 0");
  if (!(cal.max_pump_power > 0.0)) {
    throw std::invalid_argument("calibration: max_pump_power must be > 0");
  }
  const auto& lut = cal.extended_lut;
  if (lut.empty()) return;
  for (std::size_t i = 1; i < lut.size(); ++i) {
    if (!(lut[i].v > lut[i - 1].v) || !(lut[i].p_mw > lut[i - 1].p_mw)) {
      throw std::invalid_argument("calibration: extended_lut must be strictly increasing");
    }
  }
  if (lut.front().v > cal.linear_limit || lut.back().v <= cal.linear_limit) {
    throw std::invalid_argument("calibration: extended_lut must straddle linear_limit");
  }
  double p_at_limit = lut.front().p_mw;
  for (std::size_t i = 1; i < lut.size(); ++i) {
    if (cal.linear_limit <= lut[i].v) {
      p_at_limit = interp(lut[i - 1].v, lut[i - 1].p_mw, lut[i].v, lut[i].p_mw, cal.linear_limit);
      break;
    }
  }
  const double p_quad = cal.quad_coeff * cal.linear_limit * cal.linear_limit;
  if (std::abs(p_at_limit - p_quad) > 0.01 * p_quad) {
    throw std::invalid_argument("calibration: extended_lut is not continuous with the quadratic law");
  }
}

double ModulatorResponse::settle_time() const {
  if (kind == Kind::ideal) return 0.0;
  double t = 3.0 * rise_time_10_90;
  if (ringing && ringing->relative_amplitude > 0.01) {
    t = std::max(t, ringing->decay_time_s * std::log(100.0 * ringing->relative_amplitude));
  }
  return t;
}

void validate(const ModulatorResponse& resp) {
  if (resp.kind != ModulatorResponse::Kind::ideal && !(resp.rise_time_10_90 > 0.0)) {
    throw std::invalid_argument("modulator: rise_time_10_90 must be > 0");
  }
  if (resp.ringing) {
    const auto& r = *resp.ringing;
    if (!(r.relative_amplitude >= 0.0 && r.relative_amplitude <= 0.2)) {
      throw std::invalid_argument("modulator: ringing amplitude must be in [0, 0.2]");
    }
    if (!(r.frequency_hz > 0.0) || !(r.decay_time_s > 0.0)) {
      throw std::invalid_argument("modulator: ringing frequency and decay must be > 0");
    }
  }
}

AwgProgram compile_pulse_train(const PulseTrainSpec& spec, const Calibration& cal,
                               const ModulatorResponse& resp) {
  validate(cal);
  validate(resp);
  if (spec.slots.empty()) throw CompilationError(std::nullopt, "pulse train has no slots");
  if (!(spec.sample_rate_hz > 0.0) || !(spec.mode_width_s > 0.0) || !(spec.margin_s >= 0.0)) {
    throw CompilationError(std::nullopt, "pulse train timing must be positive");
  }
  if (resp.kind != ModulatorResponse::Kind::ideal && spec.margin_s < 3.0 * resp.rise_time_10_90) {
    throw CompilationError(std::nullopt, "margin " + std::to_string(spec.margin_s * 1e9) +
                                             " ns is shorter than 3x the modulator rise time");
  }
  if (spec.margin_s < resp.settle_time()) {
    throw CompilationError(std::nullopt, "margin is shorter than the modulator settle time");
  }

  const std::size_t per_slot = to_samples(spec.period(), spec.sample_rate_hz);
  if (per_slot == 0) throw CompilationError(std::nullopt, "slot period is below one sample");

  AwgProgram prog;
  prog.sample_rate_hz = spec.sample_rate_hz;
  prog.trigger_offset_s = 0.0;
  prog.samples_v.reserve(per_slot * spec.slots.size());
  for (std::size_t k = 0; k < spec.slots.size(); ++k) {
    double v = 0.0;
    if (const auto& t = spec.slots[k].target; t && t->squeezing_db > 0.0) {
      double r = 0.0;
      try {
        r = core::r_from_pure_db(t->squeezing_db);
      } catch (const std::domain_error& e) {
        throw CompilationError(k, "slot " + std::to_string(k) + ": " + e.what());
      }
      const double p = (r / cal.gain_coeff) * (r / cal.gain_coeff);
      if (p > cal.max_pump_power * (1.0 + kCeilingSlack)) {
        throw CompilationError(k, "slot " + std::to_string(k) + ": " +
                                      std::to_string(t->squeezing_db) + " dB needs " +
                                      std::to_string(p) + " mW, above the " +
                                      std::to_string(cal.max_pump_power) + " mW ceiling");
      }
      try {
        v = cal.voltage_for(std::min(p, cal.max_pump_power));
      } catch (const std::domain_error&) {
        throw CompilationError(k, "slot " + std::to_string(k) + ": " + std::to_string(p) +
                                      " mW is outside the calibrated voltage range");
      }
      if (t->quadrature == Quadrature::p_squeezed) v = -v;
    } else if (t && t->squeezing_db < 0.0) {
      throw CompilationError(k, "slot " + std::to_string(k) + ": negative squeezing level");
    }
    prog.samples_v.insert(prog.samples_v.end(), per_slot, v);
  }
  return prog;
}

std::vector<ModeWindow> mode_windows(const PulseTrainSpec& spec) {
  std::vector<ModeWindow> out;
  const double period = spec.period();
  for (std::size_t k = 0; k < spec.slots.size(); ++k) {
    const double start = static_cast<double>(k) * period + spec.margin_s;
    out.push_back({start, start + 0.5 * spec.mode_width_s, start + spec.mode_width_s});
  }
  return out;
}

PulseTrainSpec recover_pulse_train(const AwgProgram& prog, const Calibration& cal,
                                   double mode_width_s, double margin_s) {
  PulseTrainSpec spec;
  spec.mode_width_s = mode_width_s;
  spec.margin_s = margin_s;
  spec.sample_rate_hz = prog.sample_rate_hz;
  const std::size_t per_slot = to_samples(spec.period(), prog.sample_rate_hz);
  if (per_slot == 0 || prog.samples_v.size() % per_slot != 0) {
    throw std::invalid_argument("recover_pulse_train: program length is not a whole number of slots");
  }
  for (std::size_t start = 0; start < prog.samples_v.size(); start += per_slot) {
    const double v = prog.samples_v[start + per_slot / 2];
    if (v == 0.0) {
      spec.slots.push_back(Slot::vacuum());
      continue;
    }
    const double r = cal.gain_coeff * std::sqrt(cal.power_at(v));
    spec.slots.push_back(Slot::squeezed(core::pure_db_from_r(r),
                                        v > 0.0 ? Quadrature::x_squeezed : Quadrature::p_squeezed));
  }
  return spec;
}

void validate(const AwgProgram& prog, const Calibration& cal) {
  if (!(prog.sample_rate_hz > 0.0)) throw std::invalid_argument("awg: sample_rate must be > 0");
  if (prog.samples_v.empty()) throw std::invalid_argument("awg: program has no samples");
  const double ceiling = cal.voltage_ceiling() * (1.0 + kCeilingSlack);
  for (double v : prog.samples_v) {
    if (!std::isfinite(v) || std::abs(v) > ceiling) {
      throw std::domain_error("awg: |V| = " + std::to_string(std::abs(v)) +
                              " V exceeds the calibrated ceiling");
    }
  }
}

std::vector<double> pump_phase_trace(const AwgProgram& prog) {
  std::vector<double> out(prog.samples_v.size());
  std::transform(prog.samples_v.begin(), prog.samples_v.end(), out.begin(),
                 [](double v) { return v < 0.0 ? kPi : 0.0; });
  return out;
}

PowerTrace ideal_pump_power(const AwgProgram& prog, const Calibration& cal) {
  validate(prog, cal);
  PowerTrace out;
  out.dt = prog.dt();
  out.t0 = prog.trigger_offset_s;
  out.power_mw.resize(prog.samples_v.size());
  for (std::size_t i = 0; i < prog.samples_v.size(); ++i) {
    out.power_mw[i] = cal.power_at(prog.samples_v[i]);
  }
  out.phase_rad = pump_phase_trace(prog);
  return out;
}

namespace {

// Step-invariant single-pole filter; the state starts settled at the first value.
std::vector<double> first_order(const std::vector<double>& x, double dt, double rise) {
  const double tau = rise / std::log(9.0);
  const double a = std::exp(-dt / tau);
  std::vector<double> y(x.size());
  double state = x.empty() ? 0.0 : x.front();
  for (std::size_t i = 0; i < x.size(); ++i) {
    state = a * state + (1.0 - a) * x[i];
    y[i] = state;
  }
  return y;
}

// Causal Gaussian impulse response (sigma from the rise time, delayed 4 sigma).
std::vector<double> gaussian(const std::vector<double>& x, double dt, double rise) {
  const double sigma = rise / kGaussianRisePerSigma;
  const double delay = 4.0 * sigma;
  const std::size_t len = static_cast<std::size_t>(std::ceil(2.0 * delay / dt)) + 1;
  std::vector<double> h(len);
  double sum = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const double t = static_cast<double>(k) * dt - delay;
    h[k] = std::exp(-t * t / (2.0 * sigma * sigma));
    sum += h[k];
  }
  // Reversed taps turn the correlation kernel into a causal convolution.
  std::vector<double> taps(h.rbegin(), h.rend());
  for (double& t : taps) t /= sum;

  std::vector<double> ext(len - 1, x.empty() ? 0.0 : x.front());
  ext.insert(ext.end(), x.begin(), x.end());
  std::vector<double> out(ext.size());
  kernels::fir_same(ext, taps, len - 1, out);
  return {out.begin() + static_cast<std::ptrdiff_t>(len - 1), out.end()};
}

}  // namespace

ModulatedTrace apply_modulator_response(const PowerTrace& trace, const ModulatorResponse& resp) {
  validate(resp);
  const std::size_t n = trace.power_mw.size();
  if (trace.phase_rad.size() != n) throw std::invalid_argument("modulator: phase/power length mismatch");
  if (!(trace.dt > 0.0)) throw std::invalid_argument("modulator: dt must be > 0");
  if (resp.kind != ModulatorResponse::Kind::ideal && resp.rise_time_10_90 / trace.dt < 4.0) {
    throw std::invalid_argument("modulator: sample rate too low to resolve the rise time");
  }

  std::vector<double> signed_power(n);
  for (std::size_t i = 0; i < n; ++i) {
    signed_power[i] = std::cos(trace.phase_rad[i]) < 0.0 ? -trace.power_mw[i] : trace.power_mw[i];
  }

  std::vector<double> filtered;
  switch (resp.kind) {
    case ModulatorResponse::Kind::first_order:
      filtered = first_order(signed_power, trace.dt, resp.rise_time_10_90);
      break;
    case ModulatorResponse::Kind::gaussian:
      filtered = gaussian(signed_power, trace.dt, resp.rise_time_10_90);
      break;
    case ModulatorResponse::Kind::ideal:
      filtered = signed_power;
      break;
  }

  ModulatedTrace out;
  out.trace.dt = trace.dt;
  out.trace.t0 = trace.t0;
  out.trace.power_mw.resize(n);
  out.trace.phase_rad.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.trace.power_mw[i] = std::abs(filtered[i]);
    out.trace.phase_rad[i] = filtered[i] < 0.0 ? kPi : 0.0;
  }

  if (resp.ringing && resp.ringing->relative_amplitude > 0.0 && n > 1) {
    const auto& ring = *resp.ringing;
    const double p_max = *std::max_element(trace.power_mw.begin(), trace.power_mw.end());
    const double omega = 2.0 * kPi * ring.frequency_hz;
    const auto horizon = static_cast<std::size_t>(std::ceil(10.0 * ring.decay_time_s / trace.dt));
    for (std::size_t e = 1; e < n; ++e) {
      const double step = trace.power_mw[e] - trace.power_mw[e - 1];
      if (!(step > 0.2 * p_max)) continue;
      for (std::size_t m = e; m < n && m - e <= horizon; ++m) {
        const double t = static_cast<double>(m - e) * trace.dt;
        out.trace.power_mw[m] += ring.relative_amplitude * step * std::exp(-t / ring.decay_time_s) *
                                 std::sin(omega * t);
      }
    }
  }

  for (double& p : out.trace.power_mw) {
    if (p < 0.0) {
      p = 0.0;
      ++out.clamp_count;
    }
  }
  return out;
}

double measure_rise_time(const PowerTrace& trace, double t_begin, double t_end) {
  std::size_t b = 0;
  while (b < trace.power_mw.size() && trace.time_at(b) < t_begin) ++b;
  std::size_t e = b;
  while (e < trace.power_mw.size() && trace.time_at(e) < t_end) ++e;
  if (e - b < 3) throw std::invalid_argument("measure_rise_time: window too short");
  const auto [lo_it, hi_it] = std::minmax_element(trace.power_mw.begin() + static_cast<std::ptrdiff_t>(b),
                                                  trace.power_mw.begin() + static_cast<std::ptrdiff_t>(e));
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw std::invalid_argument("measure_rise_time: no edge in window");
  auto crossing = [&](double level) {
    for (std::size_t i = b + 1; i < e; ++i) {
      const double y0 = trace.power_mw[i - 1];
      const double y1 = trace.power_mw[i];
      if (y0 < level && y1 >= level) {
        return trace.time_at(i - 1) + trace.dt * (level - y0) / (y1 - y0);
      }
    }
    throw std::invalid_argument("measure_rise_time: level not crossed");
  };
  return crossing(lo + 0.9 * (hi - lo)) - crossing(lo + 0.1 * (hi - lo));
}

AwgProgram square_wave(double amplitude_v, double period_s, std::size_t n_periods,
                       double sample_rate_hz) {
  AwgProgram prog;
  prog.sample_rate_hz = sample_rate_hz;
  const std::size_t half = to_samples(0.5 * period_s, sample_rate_hz);
  for (std::size_t k = 0; k < n_periods; ++k) {
    prog.samples_v.insert(prog.samples_v.end(), half, amplitude_v);
    prog.samples_v.insert(prog.samples_v.end(), half, -amplitude_v);
  }
  return prog;
}

AwgProgram sine_wave(double amplitude_v, double frequency_hz, double n_cycles, double sample_rate_hz) {
  AwgProgram prog;
  prog.sample_rate_hz = sample_rate_hz;
  const std::size_t n = to_samples(n_cycles / frequency_hz, sample_rate_hz);
  prog.samples_v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    prog.samples_v[i] = amplitude_v * std::sin(2.0 * kPi * frequency_hz * prog.time_at(i));
  }
  return prog;
}

AwgProgram gaussian_pulses(double amplitude_v, const std::vector<double>& fwhm_s,
                           const std::vector<double>& centers_s, double duration_s,
                           double sample_rate_hz) {
  if (fwhm_s.size() != centers_s.size()) {
    throw std::invalid_argument("gaussian_pulses: fwhm and centers differ in length");
  }
  AwgProgram prog;
  prog.sample_rate_hz = sample_rate_hz;
  prog.samples_v.assign(to_samples(duration_s, sample_rate_hz), 0.0);
  const double fwhm_per_sigma = 2.0 * std::sqrt(2.0 * std::log(2.0));
  for (std::size_t p = 0; p < fwhm_s.size(); ++p) {
    const double sigma = fwhm_s[p] / fwhm_per_sigma;
    for (std::size_t i = 0; i < prog.samples_v.size(); ++i) {
      const double t = prog.time_at(i) - centers_s[p];
      prog.samples_v[i] += amplitude_v * std::exp(-t * t / (2.0 * sigma * sigma));
    }
  }
  for (double& v : prog.samples_v) v = std::clamp(v, -std::abs(amplitude_v), std::abs(amplitude_v));
  return prog;
}

AwgProgram alternating_sign(double amplitude_v, double half_period_s, double duration_s,
                            double sample_rate_hz) {
  AwgProgram prog;
  prog.sample_rate_hz = sample_rate_hz;
  const std::size_t half = to_samples(half_period_s, sample_rate_hz);
  const std::size_t n = to_samples(duration_s, sample_rate_hz);
  if (half == 0) throw std::invalid_argument("alternating_sign: half period below one sample");
  prog.samples_v.resize(n);
  for (std::size_t i = 0; i < n; ++i) prog.samples_v[i] = (i / half) % 2 == 0 ? amplitude_v : -amplitude_v;
  return prog;
}

AwgProgram piecewise_linear(const std::vector<std::pair<double, double>>& knots, double sample_rate_hz) {
  if (knots.size() < 2) throw std::invalid_argument("piecewise_linear: need at least two knots");
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i].first > knots[i - 1].first)) {
      throw std::invalid_argument("piecewise_linear: knot times must increase");
    }
  }
  AwgProgram prog;
  prog.sample_rate_hz = sample_rate_hz;
  prog.trigger_offset_s = knots.front().first;
  const std::size_t n = to_samples(knots.back().first - knots.front().first, sample_rate_hz);
  prog.samples_v.resize(n);
  std::size_t seg = 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = prog.time_at(i);
    while (seg + 1 < knots.size() && t > knots[seg].first) ++seg;
    const auto& [t0, v0] = knots[seg - 1];
    const auto& [t1, v1] = knots[seg];
    prog.samples_v[i] = interp(t0, v0, t1, v1, t);
  }
  return prog;
}

AwgProgram pad(const AwgProgram& prog, double lead_s, double trail_s) {
  AwgProgram out;
  out.sample_rate_hz = prog.sample_rate_hz;
  const std::size_t lead = to_samples(lead_s, prog.sample_rate_hz);
  const std::size_t trail = to_samples(trail_s, prog.sample_rate_hz);
  out.trigger_offset_s = prog.trigger_offset_s - static_cast<double>(lead) * prog.dt();
  out.samples_v.assign(lead, 0.0);
  out.samples_v.insert(out.samples_v.end(), prog.samples_v.begin(), prog.samples_v.end());
  out.samples_v.insert(out.samples_v.end(), trail, 0.0);
  return out;
}

}  // namespace tmsqz::pump

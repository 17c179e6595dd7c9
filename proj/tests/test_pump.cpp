#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "tmsqz/errors.hpp"
#include "tmsqz/pump_program.hpp"
#include "tmsqz/quantum_core.hpp"

using namespace tmsqz::pump;
using tmsqz::CompilationError;

namespace {

double max_between(const PowerTrace& t, double a, double b) {
  double m = 0.0;
  for (std::size_t i = 0; i < t.power_mw.size(); ++i) {
    if (t.time_at(i) >= a && t.time_at(i) < b) m = std::max(m, t.power_mw[i]);
  }
  return m;
}

double integral(const PowerTrace& t) {
  return t.dt * std::accumulate(t.power_mw.begin(), t.power_mw.end(), 0.0);
}

PulseTrainSpec three_slots() {
  PulseTrainSpec spec;
  spec.slots = {Slot::squeezed(2.71, Quadrature::x_squeezed), Slot::vacuum(),
                Slot::squeezed(2.71, Quadrature::p_squeezed)};
  return spec;
}

}  // namespace

TEST_SUITE("pump") {

TEST_CASE("default calibration puts 6.5 mW at the 160 mV ceiling") {
  const Calibration cal;
  CHECK(cal.quad_coeff == doctest::Approx(253.90625));
  CHECK(cal.power_at(0.16) == doctest::Approx(6.5));
  CHECK(cal.power_at(-0.08) == doctest::Approx(6.5 / 4));
  CHECK(cal.power_at(0.0) == 0.0);
  CHECK(cal.voltage_for(6.5) == doctest::Approx(0.16));
  CHECK_THROWS_AS(cal.power_at(0.2), std::domain_error);
  CHECK_THROWS_AS(cal.voltage_for(7.0), std::domain_error);
  CHECK_THROWS_AS(cal.voltage_for(-1.0), std::domain_error);
  // 2.71 dB pure squeezing needs exactly the ceiling power.
  const double r = tmsqz::core::r_from_pure_db(2.71);
  CHECK((r / cal.gain_coeff) * (r / cal.gain_coeff) == doctest::Approx(6.5).epsilon(1e-12));
}

TEST_CASE("extended LUT beyond the linear region") {
  Calibration cal;
  cal.extended_lut = {{0.15, cal.quad_coeff * 0.15 * 0.15}, {0.16, 6.5}, {0.20, 9.0}, {0.25, 11.0}};
  cal.max_pump_power = 11.0;
  CHECK_NOTHROW(validate(cal));
  CHECK(cal.voltage_ceiling() == 0.25);
  CHECK(cal.power_at(0.18) == doctest::Approx(7.75));
  CHECK(cal.voltage_for(10.0) == doctest::Approx(0.225));
  CHECK(cal.voltage_for(cal.power_at(0.21)) == doctest::Approx(0.21));
  Calibration broken = cal;
  broken.extended_lut[1].p_mw = 8.0;  // discontinuous at the linear limit
  CHECK_THROWS_AS(validate(broken), std::invalid_argument);
  Calibration unsorted = cal;
  std::swap(unsorted.extended_lut[2], unsorted.extended_lut[3]);
  CHECK_THROWS_AS(validate(unsorted), std::invalid_argument);
}

TEST_CASE("compile: staircase (+V, 0, -V), 240 ns") {
  const Calibration cal;
  const auto prog = compile_pulse_train(three_slots(), cal, ModulatorResponse{});
  REQUIRE(prog.samples_v.size() == 240);
  CHECK(prog.duration() == doctest::Approx(240e-9));
  CHECK(prog.samples_v[40] == doctest::Approx(0.16));
  CHECK(prog.samples_v[120] == 0.0);
  CHECK(prog.samples_v[200] == doctest::Approx(-0.16));
  const auto ph = pump_phase_trace(prog);
  CHECK(ph[40] == 0.0);
  CHECK(ph[120] == 0.0);
  CHECK(ph[200] == doctest::Approx(oracle::kPi));
  for (double v : prog.samples_v) CHECK(std::abs(v) <= cal.voltage_ceiling() * (1 + 1e-9));
}

TEST_CASE("compile: single vacuum slot is all zero") {
  PulseTrainSpec spec;
  spec.slots = {Slot::vacuum()};
  const auto prog = compile_pulse_train(spec, Calibration{}, ModulatorResponse{});
  CHECK(prog.samples_v.size() == 80);
  CHECK(std::all_of(prog.samples_v.begin(), prog.samples_v.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("compile: infeasible targets name the slot") {
  PulseTrainSpec spec;
  spec.slots = {Slot::squeezed(1.0, Quadrature::x_squeezed), Slot::squeezed(3.5, Quadrature::p_squeezed)};
  try {
    compile_pulse_train(spec, Calibration{}, ModulatorResponse{});
    FAIL("expected a compilation error");
  } catch (const CompilationError& e) {
    REQUIRE(e.slot().has_value());
    CHECK(*e.slot() == 1);
  }
  // A quadratic region that cannot reach 6.5 mW and no LUT.
  Calibration weak;
  weak.quad_coeff = 100.0;
  spec.slots = {Slot::squeezed(2.71, Quadrature::x_squeezed)};
  CHECK_THROWS_AS(compile_pulse_train(spec, weak, ModulatorResponse{}), CompilationError);
  // The same target with a LUT reaching far enough compiles.
  weak.extended_lut = {{0.1, 1.0}, {0.16, 2.56}, {0.3, 7.0}};
  const auto prog = compile_pulse_train(spec, weak, ModulatorResponse{});
  CHECK(weak.power_at(prog.samples_v[0]) == doctest::Approx(6.5).epsilon(1e-9));
}

TEST_CASE("compile: margin shorter than 3 rise times is rejected") {
  auto spec = three_slots();
  spec.margin_s = 20e-9;
  CHECK_THROWS_AS(compile_pulse_train(spec, Calibration{}, ModulatorResponse{}), CompilationError);
  spec.margin_s = 21e-9;
  CHECK_NOTHROW(compile_pulse_train(spec, Calibration{}, ModulatorResponse{}));
  spec.slots.clear();
  CHECK_THROWS_AS(compile_pulse_train(spec, Calibration{}, ModulatorResponse{}), CompilationError);
}

TEST_CASE("compile is idempotent under recovery") {
  PulseTrainSpec spec;
  spec.slots = {Slot::squeezed(2.71, Quadrature::x_squeezed), Slot::squeezed(1.5, Quadrature::x_squeezed),
                Slot::vacuum(), Slot::squeezed(1.0, Quadrature::p_squeezed)};
  const Calibration cal;
  const auto prog = compile_pulse_train(spec, cal, ModulatorResponse{});
  const auto back = recover_pulse_train(prog, cal, spec.mode_width_s, spec.margin_s);
  REQUIRE(back.slots.size() == spec.slots.size());
  CHECK_FALSE(back.slots[2].target.has_value());
  CHECK(back.slots[1].target->squeezing_db == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(back.slots[3].target->quadrature == Quadrature::p_squeezed);
  const auto again = compile_pulse_train(back, cal, ModulatorResponse{});
  REQUIRE(again.samples_v.size() == prog.samples_v.size());
  for (std::size_t i = 0; i < prog.samples_v.size(); ++i) {
    CHECK(again.samples_v[i] == doctest::Approx(prog.samples_v[i]).epsilon(1e-12));
  }
}

TEST_CASE("compiled powers settle within 1% of each slot target") {
  PulseTrainSpec spec;
  spec.slots = {Slot::squeezed(2.71, Quadrature::x_squeezed), Slot::squeezed(1.0, Quadrature::p_squeezed),
                Slot::vacuum(), Slot::squeezed(2.0, Quadrature::x_squeezed)};
  const Calibration cal;
  const ModulatorResponse resp;
  const auto ideal = ideal_pump_power(compile_pulse_train(spec, cal, resp), cal);
  const auto mod = apply_modulator_response(ideal, resp);
  const auto windows = mode_windows(spec);
  for (std::size_t k = 0; k < spec.slots.size(); ++k) {
    double target = 0.0;
    if (spec.slots[k].target) {
      const double r = oracle::r_from_db(spec.slots[k].target->squeezing_db);
      target = (r / cal.gain_coeff) * (r / cal.gain_coeff);
    }
    CHECK(windows[k].end_s - windows[k].start_s == doctest::Approx(spec.mode_width_s));
    const double slot_start = static_cast<double>(k) * spec.period();
    for (std::size_t i = 0; i < ideal.power_mw.size(); ++i) {
      const double t = ideal.time_at(i);
      if (t >= slot_start && t < slot_start + spec.period()) {
        CHECK(ideal.power_mw[i] == doctest::Approx(target).epsilon(1e-9));
      }
      // Inside the mode window the modulated power has settled as well.
      if (t >= windows[k].start_s && t < windows[k].end_s) {
        CHECK(std::abs(mod.trace.power_mw[i] - target) <= 0.01 * (target > 0.0 ? target : 6.5));
      }
    }
  }
}

TEST_CASE("ideal pump power follows a V^2") {
  const Calibration cal;
  AwgProgram prog;
  prog.samples_v = {0.0, 0.16, -0.16, 0.08};
  const auto p = ideal_pump_power(prog, cal);
  CHECK(p.power_mw[0] == 0.0);
  CHECK(p.power_mw[1] == doctest::Approx(cal.quad_coeff * 0.0256));
  CHECK(p.power_mw[2] == doctest::Approx(6.5));
  CHECK(p.phase_rad[2] == doctest::Approx(oracle::kPi));
  CHECK(p.power_mw[3] == doctest::Approx(6.5 / 4));
  prog.samples_v = {0.2};
  CHECK_THROWS_AS(ideal_pump_power(prog, cal), std::domain_error);
  prog.samples_v.clear();
  CHECK_THROWS_AS(ideal_pump_power(prog, cal), std::invalid_argument);
}

TEST_CASE("modulator: constant trace unchanged") {
  PowerTrace t;
  t.power_mw.assign(300, 3.3);
  t.phase_rad.assign(300, 0.0);
  for (auto kind : {ModulatorResponse::Kind::first_order, ModulatorResponse::Kind::gaussian}) {
    ModulatorResponse resp;
    resp.kind = kind;
    const auto out = apply_modulator_response(t, resp);
    for (double p : out.trace.power_mw) CHECK(p == doctest::Approx(3.3).epsilon(1e-12));
    CHECK(out.clamp_count == 0);
  }
}

TEST_CASE("modulator: 10-90 rise time of a step is 7 ns within one sample") {
  PowerTrace t;
  t.dt = 1e-9;
  for (int i = 0; i < 200; ++i) {
    t.power_mw.push_back(i < 50 ? 0.0 : 6.5);
    t.phase_rad.push_back(0.0);
  }
  for (auto kind : {ModulatorResponse::Kind::first_order, ModulatorResponse::Kind::gaussian}) {
    ModulatorResponse resp;
    resp.kind = kind;
    const double rise = measure_rise_time(apply_modulator_response(t, resp).trace, 0.0, 200e-9);
    CHECK(std::abs(rise - 7e-9) <= 1e-9);
  }
  ModulatorResponse ideal;
  ideal.kind = ModulatorResponse::Kind::ideal;
  const auto same = apply_modulator_response(t, ideal);
  CHECK(same.trace.power_mw == t.power_mw);
}

TEST_CASE("modulator: undersampled rise time is rejected") {
  PowerTrace t;
  t.dt = 2e-9;
  t.power_mw.assign(10, 1.0);
  t.phase_rad.assign(10, 0.0);
  CHECK_THROWS_AS(apply_modulator_response(t, ModulatorResponse{}), std::invalid_argument);
  t.phase_rad.pop_back();
  t.dt = 1e-9;
  CHECK_THROWS_AS(apply_modulator_response(t, ModulatorResponse{}), std::invalid_argument);
}

TEST_CASE("modulator: Gaussian pulse peaks match the exponentially modified Gaussian") {
  const Calibration cal;
  const auto prog = pad(gaussian_pulses(0.16, {40e-9, 20e-9, 10e-9}, {100e-9, 250e-9, 400e-9}, 500e-9), 100e-9,
                        100e-9);
  const auto mod = apply_modulator_response(ideal_pump_power(prog, cal), ModulatorResponse{});
  double previous = 1e9;
  const double fwhm_per_sigma = 2.0 * std::sqrt(2.0 * std::log(2.0));
  for (auto [fwhm, center] : {std::pair{40e-9, 100e-9}, {20e-9, 250e-9}, {10e-9, 400e-9}}) {
    const double peak = max_between(mod.trace, center - 50e-9, center + 50e-9);
    // V^2 halves the variance: sigma_P = sigma_V / sqrt 2.
    const double expect = oracle::exgaussian_peak(6.5, fwhm / fwhm_per_sigma / std::sqrt(2.0), 7e-9);
    CHECK(std::abs(peak / expect - 1.0) < 0.01);
    CHECK(peak < previous);
    previous = peak;
  }
}

TEST_CASE("modulator: pulse energy preserved for pulses >= 10 rise times") {
  const Calibration cal;
  for (double width : {70e-9, 150e-9}) {
    AwgProgram prog;
    prog.samples_v.assign(static_cast<std::size_t>(width * 1e9), 0.12);
    prog = pad(prog, 50e-9, 150e-9);
    const auto ideal = ideal_pump_power(prog, cal);
    for (auto kind : {ModulatorResponse::Kind::first_order, ModulatorResponse::Kind::gaussian}) {
      ModulatorResponse resp;
      resp.kind = kind;
      const auto out = apply_modulator_response(ideal, resp);
      CHECK(integral(out.trace) == doctest::Approx(integral(ideal)).epsilon(0.01));
    }
  }
}

TEST_CASE("modulator: sign inversion passes through zero power") {
  const Calibration cal;
  const auto mod = apply_modulator_response(ideal_pump_power(square_wave(0.16, 200e-9, 1), cal), ModulatorResponse{});
  // Just after the flip the filtered signed power is still small.
  CHECK(mod.trace.power_mw[102] < 0.5 * 6.5);
  CHECK(mod.trace.phase_rad[98] == 0.0);
  CHECK(mod.trace.phase_rad[150] == doctest::Approx(oracle::kPi));
}

TEST_CASE("modulator: ringing is added at rising edges and clamps are counted") {
  PowerTrace t;
  for (int i = 0; i < 200; ++i) {
    t.power_mw.push_back(i >= 20 && i < 120 ? 6.5 : 0.0);
    t.phase_rad.push_back(0.0);
  }
  ModulatorResponse plain;
  ModulatorResponse ringing;
  ringing.ringing = Ringing{};
  const auto a = apply_modulator_response(t, plain);
  const auto b = apply_modulator_response(t, ringing);
  double diff = 0.0;
  for (std::size_t i = 0; i < 200; ++i) diff = std::max(diff, std::abs(a.trace.power_mw[i] - b.trace.power_mw[i]));
  CHECK(diff > 0.05 * 6.5 * 0.5);
  CHECK(diff < 0.05 * 6.5 * 1.01);
  // A 2 ns spike: the ringing outlives the pulse and pulls the trace below zero.
  PowerTrace spike;
  for (int i = 0; i < 100; ++i) {
    spike.power_mw.push_back(i == 20 || i == 21 ? 6.5 : 0.0);
    spike.phase_rad.push_back(0.0);
  }
  ModulatorResponse strong;
  strong.kind = ModulatorResponse::Kind::ideal;
  strong.ringing = Ringing{250e6, 0.2, 10e-9};
  const auto c = apply_modulator_response(spike, strong);
  CHECK(c.clamp_count > 0);
  for (double p : c.trace.power_mw) CHECK(p >= 0.0);
  CHECK(ringing.settle_time() >= 3 * 7e-9);
  ModulatorResponse bad;
  bad.ringing = Ringing{250e6, 0.3, 10e-9};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("waveform builders") {
  const auto sq = square_wave(0.1, 100e-9, 2);
  CHECK(sq.samples_v.size() == 200);
  CHECK(sq.samples_v[10] == 0.1);
  CHECK(sq.samples_v[60] == -0.1);
  const auto alt = alternating_sign(0.16, 50e-9, 1000e-9);
  CHECK(alt.samples_v.size() == 1000);
  const auto ph = pump_phase_trace(alt);
  CHECK(ph[25] == 0.0);
  CHECK(ph[75] == doctest::Approx(oracle::kPi));
  CHECK(ph[125] == 0.0);
  const auto sine = sine_wave(0.1, 10e6, 4.0);
  CHECK(sine.samples_v.size() == 400);
  CHECK(sine.samples_v[25] == doctest::Approx(0.1));
  const auto pl = piecewise_linear({{0.0, 0.0}, {10e-9, 0.1}, {20e-9, -0.1}});
  CHECK(pl.samples_v[5] == doctest::Approx(0.05));
  CHECK(pl.samples_v[15] == doctest::Approx(0.0).epsilon(1e-12));
  const auto padded = pad(sq, 20e-9, 30e-9);
  CHECK(padded.samples_v.size() == 250);
  CHECK(padded.trigger_offset_s == doctest::Approx(-20e-9));
  CHECK(padded.time_at(20) == doctest::Approx(0.0));
  const auto g = gaussian_pulses(0.16, {20e-9}, {50e-9}, 100e-9);
  CHECK(g.samples_v[50] == doctest::Approx(0.16));
  CHECK(g.samples_v[60] == doctest::Approx(0.08).epsilon(1e-9));  // half maximum at FWHM / 2
}

}  // TEST_SUITE

#include "tmsqz/scenarios.hpp"

#include <fftw3.h>

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "tmsqz/dsp_analysis.hpp"
#include "tmsqz/homodyne_sim.hpp"
#include "tmsqz/io.hpp"
#include "tmsqz/kernels.hpp"
#include "tmsqz/opa_model.hpp"
#include "tmsqz/pump_program.hpp"
#include "tmsqz/quantum_core.hpp"
#include "tmsqz/state_estimation.hpp"

namespace tmsqz::cli {

namespace {

constexpr double kPi = std::numbers::pi;

json common_params() {
  return {{"detector.bandwidth_hz", 200e6},
          {"detector.filter", "butterworth2"},
          {"detector.clearance_db", nullptr},
          {"modulator.rise_time_s", 7e-9},
          {"modulator.kind", "first_order"},
          {"modulator.ringing", false},
          {"loss", opa::kFittedLoss}};
}

json scenario_params(const std::string& name) {
  if (name == "spectrum") {
    return {{"pump_mw", 6.5},
            {"frame_samples", 4096},
            {"detector.clearance_db", 30.0},
            {"band_lo_hz", 1e6},
            {"band_hi_hz", 10e6},
            {"high_band_lo_hz", 400e6},
            {"high_band_hi_hz", 490e6}};
  }
  if (name == "waveforms") {
    return {{"amplitude_v", 0.16}, {"pad_s", 100e-9}, {"fir_taps", 255}, {"fir_cutoff_hz", 100e6}, {"lo_phase_rad", 0.0}};
  }
  if (name == "tm_squeezing") {
    return {{"slots", json::array({{{"quadrature", "x"}, {"db", 2.71}},
                                   {{"quadrature", "x"}, {"db", 1.5}},
                                   {{"quadrature", "vacuum"}, {"db", 0.0}},
                                   {{"quadrature", "p"}, {"db", 2.71}},
                                   {{"quadrature", "p"}, {"db", 1.0}},
                                   {{"quadrature", "x"}, {"db", 2.0}}})},
            {"mode_width_s", 30e-9},
            {"margin_s", 50e-9},
            {"pad_s", 100e-9},
            {"mode_gamma", 2.5e8},
            {"n_phases", 12},
            {"phase_step_deg", 15.0},
            {"enforce_physical", true}};
  }
  if (name == "epr") {
    return {{"amplitude_v", 0.16},   {"half_period_s", 50e-9}, {"duration_s", 1000e-9},
            {"pad_s", 200e-9},       {"gamma", 5e6},           {"period_s", 100e-9},
            {"t_w_s", 1000e-9},      {"scan_half_width_s", 25e-9}, {"scan_step_s", 1e-9}};
  }
  if (name == "calibrate") {
    return {{"powers_mw", {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5}},
            {"gain_noise", 0.002},
            {"points", nullptr},
            {"loss_budget.opa_internal", 0.09},
            {"loss_budget.propagation", 0.02},
            {"loss_budget.mode_matching", 0.03},
            {"loss_budget.photodiode", 0.01}};
  }
  throw UsageError("unknown scenario '" + name + "'");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) { return splitmix64(seed ^ splitmix64(k + 1)); }

bool compatible(const json& def, const json& v) {
  if (def.is_null()) return v.is_null() || v.is_number();
  if (def.is_number()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array() || v.is_null();
  return def.type() == v.type();
}

struct Context {
  const ScenarioConfig& cfg;
  json params;
  io::CalibrationFile calibration;
  std::string hash;
  io::Comments comments;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, std::string>> files;  // name, content hash

  double num(const std::string& k) const {
    const auto& v = params.at(k);
    if (v.is_null()) return std::numeric_limits<double>::infinity();
    return v.get<double>();
  }
  std::size_t count(const std::string& k) const {
    const double v = num(k);
    if (!(v >= 1.0) || v != std::floor(v)) throw UsageError("parameter " + k + " must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  std::string str(const std::string& k) const { return params.at(k).get<std::string>(); }
  bool flag(const std::string& k) const { return params.at(k).get<bool>(); }

  void emit(const std::string& name, const std::string& content) {
    io::write_text(cfg.output_dir / name, content);
    files.emplace_back(name, hex64(fnv1a64(content)));
  }
  void emit_json(const std::string& name, json j) {
    j["seed"] = cfg.seed;
    j["config_hash"] = hash;
    emit(name, j.dump(2) + "\n");
  }
  void check(const std::string& name, bool ok, const std::string& detail = "") {
    checks.push_back({name, ok, detail});
  }
  homodyne::SimOptions sim() const { return {cfg.threads}; }
};

homodyne::DetectorModel detector(const Context& c) {
  homodyne::DetectorModel d;
  d.bandwidth_hz = c.num("detector.bandwidth_hz");
  const auto f = c.str("detector.filter");
  if (f == "butterworth2") d.filter_kind = homodyne::DetectorModel::Filter::butterworth2;
  else if (f == "first_order") d.filter_kind = homodyne::DetectorModel::Filter::first_order;
  else if (f == "none") d.filter_kind = homodyne::DetectorModel::Filter::none;
  else throw UsageError("detector.filter must be butterworth2, first_order or none");
  d.clearance_db = c.num("detector.clearance_db");
  try {
    homodyne::validate(d);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return d;
}

pump::ModulatorResponse modulator(const Context& c) {
  pump::ModulatorResponse m;
  m.rise_time_10_90 = c.num("modulator.rise_time_s");
  const auto k = c.str("modulator.kind");
  if (k == "first_order") m.kind = pump::ModulatorResponse::Kind::first_order;
  else if (k == "gaussian") m.kind = pump::ModulatorResponse::Kind::gaussian;
  else if (k == "ideal") m.kind = pump::ModulatorResponse::Kind::ideal;
  else throw UsageError("modulator.kind must be first_order, gaussian or ideal");
  if (c.flag("modulator.ringing")) m.ringing = pump::Ringing{};
  try {
    pump::validate(m);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return m;
}

double loss(const Context& c) {
  const double l = c.num("loss");
  if (!(l >= 0.0 && l < 1.0)) throw UsageError("loss must be in [0, 1)");
  return l;
}

opa::GainFit gain(const Context& c) { return {c.calibration.calibration.gain_coeff, 0.0}; }

template <typename F>
std::string to_text(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

// ------------------------------------------------------------ spectrum

void run_spectrum(Context& c) {
  const auto det = detector(c);
  const std::size_t ns = c.count("frame_samples");
  const std::size_t n = c.cfg.n_frames;
  const double r = c.calibration.calibration.gain_coeff * std::sqrt(c.num("pump_mw"));
  const double l = loss(c);
  const auto traj = opa::constant_trajectory(r, 0.0, l, ns, det.dt(), 0.0);
  const homodyne::LoSchedule lo{{{0.0, n}, {0.5 * kPi, n}}};
  const auto frames = homodyne::simulate_frames(traj, det, lo, c.cfg.seed, c.sim());
  const auto ref = homodyne::simulate_vacuum_reference(det, ns, 0.0, n, c.cfg.seed, c.sim());
  const auto sq = dsp::average_spectrum(homodyne::select_phase(frames, 0.0), ref);
  const auto asq = dsp::average_spectrum(homodyne::select_phase(frames, 0.5 * kPi), ref);

  const double lo_hz = c.num("band_lo_hz"), hi_hz = c.num("band_hi_hz");
  const auto bs = dsp::band_average(sq, lo_hz, hi_hz);
  const auto ba = dsp::band_average(asq, lo_hz, hi_hz);
  const auto hs = dsp::band_average(sq, c.num("high_band_lo_hz"), c.num("high_band_hi_hz"));
  const auto ha = dsp::band_average(asq, c.num("high_band_lo_hz"), c.num("high_band_hi_hz"));

  c.emit("spectrum_squeezing.csv", to_text([&](auto& os) { io::write_spectrum_csv(os, sq, c.comments); }));
  c.emit("spectrum_antisqueezing.csv", to_text([&](auto& os) { io::write_spectrum_csv(os, asq, c.comments); }));

  json report = {{"pump_mw", c.num("pump_mw")},
                 {"r", r},
                 {"loss", l},
                 {"band_hz", {lo_hz, hi_hz}},
                 {"squeezing_db", bs.level_db},
                 {"squeezing_stderr_db", bs.std_error},
                 {"antisqueezing_db", ba.level_db},
                 {"antisqueezing_stderr_db", ba.std_error},
                 {"high_band_hz", {c.num("high_band_lo_hz"), c.num("high_band_hi_hz")}},
                 {"high_band_squeezing_db", hs.level_db},
                 {"high_band_antisqueezing_db", ha.level_db}};
  c.check("squeezing_below_shot_noise", bs.level_db < 0.0);
  c.check("antisqueezing_above_shot_noise", ba.level_db > 0.0);
  c.check("rolloff_toward_shot_noise", std::abs(hs.level_db) < std::abs(bs.level_db) &&
                                           std::abs(ha.level_db) < std::abs(ba.level_db));
  try {
    const auto inv = dsp::estimate_pure_squeezing_and_loss(bs.level_db, ba.level_db, bs.std_error, ba.std_error);
    report["pure_squeezing"] = io::to_json(inv);
    c.check("loss_inversion_feasible", true);
  } catch (const std::domain_error& e) {
    report["pure_squeezing"] = nullptr;
    c.check("loss_inversion_feasible", false, e.what());
  }
  c.emit_json("spectrum_report.json", report);
}

// ------------------------------------------------------------ waveforms

struct Waveform {
  std::string name;
  pump::AwgProgram prog;
};

std::vector<Waveform> fig_waveforms(double amp, double pad) {
  std::vector<Waveform> w;
  w.push_back({"square", pump::square_wave(amp, 400e-9, 2)});
  w.push_back({"sine", pump::sine_wave(amp, 10e6, 4.0)});
  w.push_back({"gaussian", pump::gaussian_pulses(amp, {40e-9, 20e-9, 10e-9}, {100e-9, 250e-9, 400e-9}, 500e-9)});
  const double a = amp;
  w.push_back({"arbitrary", pump::piecewise_linear({{0.0, 0.0},
                                                    {40e-9, a},
                                                    {80e-9, 0.3 * a},
                                                    {120e-9, 0.75 * a},
                                                    {160e-9, -0.6 * a},
                                                    {220e-9, -a},
                                                    {260e-9, 0.0},
                                                    {300e-9, 0.5 * a},
                                                    {340e-9, 0.5 * a},
                                                    {380e-9, 0.0}})});
  for (auto& x : w) x.prog = pump::pad(x.prog, pad, pad);
  return w;
}

double max_in(const pump::PowerTrace& t, double a, double b) {
  double m = 0.0;
  for (std::size_t i = 0; i < t.power_mw.size(); ++i) {
    if (t.time_at(i) >= a && t.time_at(i) < b) m = std::max(m, t.power_mw[i]);
  }
  return m;
}

void run_waveforms(Context& c) {
  const auto det = detector(c);
  const auto resp = modulator(c);
  const double l = loss(c);
  const std::size_t n = c.cfg.n_frames;
  const auto taps = c.count("fir_taps");
  const double cutoff = c.num("fir_cutoff_hz");
  const auto& cal = c.calibration.calibration;
  json report = json::object();
  std::uint64_t k = 0;
  for (const auto& wf : fig_waveforms(c.num("amplitude_v"), c.num("pad_s"))) {
    pump::validate(wf.prog, cal);
    const auto ideal = pump::ideal_pump_power(wf.prog, cal);
    const auto mod = pump::apply_modulator_response(ideal, resp);
    const auto traj = opa::trajectory_from_pump(mod.trace, gain(c), l);
    const auto frames = homodyne::simulate_frames(traj, det, c.num("lo_phase_rad"), n, derive_seed(c.cfg.seed, k++), c.sim());
    const auto ref = homodyne::simulate_vacuum_reference(det, frames.n_samples, frames.t0, n,
                                                          derive_seed(c.cfg.seed, k++), c.sim());
    const auto trace = dsp::pointwise_variance(dsp::fir_lowpass(frames, taps, cutoff), dsp::fir_lowpass(ref, taps, cutoff));

    c.emit("waveform_" + wf.name + "_awg.csv", to_text([&](auto& os) { io::write_awg_csv(os, wf.prog, c.comments); }));
    c.emit("waveform_" + wf.name + "_pump_ideal.csv", to_text([&](auto& os) { io::write_power_csv(os, ideal, c.comments); }));
    c.emit("waveform_" + wf.name + "_pump.csv", to_text([&](auto& os) { io::write_power_csv(os, mod.trace, c.comments); }));
    c.emit("waveform_" + wf.name + "_variance.csv", to_text([&](auto& os) { io::write_variance_csv(os, trace, c.comments); }));

    // Edge-affected FIR samples are excluded from the summary.
    const std::size_t edge = (taps - 1) / 2;
    double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
    for (std::size_t i = edge; i + edge < trace.variance.size(); ++i) {
      vmin = std::min(vmin, trace.variance[i]);
      vmax = std::max(vmax, trace.variance[i]);
    }
    json entry = {{"variance_min", vmin}, {"variance_max", vmax}, {"clamped_samples", mod.clamp_count}};
    c.check(wf.name + "_variance_finite", std::isfinite(vmin) && std::isfinite(vmax));
    if (wf.name == "square") {
      entry["rise_time_s"] = pump::measure_rise_time(mod.trace, -50e-9, 150e-9);
      c.check("square_squeezes_and_antisqueezes", vmin < 1.0 && vmax > 1.0);
    }
    if (wf.name == "gaussian") {
      std::vector<double> peaks;
      for (double t : {100e-9, 250e-9, 400e-9}) peaks.push_back(max_in(mod.trace, t - 50e-9, t + 50e-9));
      entry["fwhm_s"] = {40e-9, 20e-9, 10e-9};
      entry["peak_power_mw"] = peaks;
      c.check("gaussian_peaks_decrease", peaks[0] > peaks[1] && peaks[1] > peaks[2]);
    }
    report[wf.name] = entry;
  }
  c.emit_json("waveforms_report.json", report);
}

// ------------------------------------------------------------ tm_squeezing

void run_tm_squeezing(Context& c) {
  const auto det = detector(c);
  const auto resp = modulator(c);
  const double l = loss(c);
  const std::size_t n = c.cfg.n_frames;
  const auto& cal = c.calibration.calibration;

  pump::PulseTrainSpec spec;
  spec.mode_width_s = c.num("mode_width_s");
  spec.margin_s = c.num("margin_s");
  spec.sample_rate_hz = det.sample_rate_hz;
  for (const auto& s : c.params.at("slots")) {
    const auto q = s.at("quadrature").get<std::string>();
    if (q == "vacuum") spec.slots.push_back(pump::Slot::vacuum());
    else if (q == "x") spec.slots.push_back(pump::Slot::squeezed(s.at("db").get<double>(), pump::Quadrature::x_squeezed));
    else if (q == "p") spec.slots.push_back(pump::Slot::squeezed(s.at("db").get<double>(), pump::Quadrature::p_squeezed));
    else throw UsageError("slot quadrature must be x, p or vacuum");
  }
  const auto prog = pump::pad(pump::compile_pulse_train(spec, cal, resp), c.num("pad_s"), c.num("pad_s"));
  const auto ideal = pump::ideal_pump_power(prog, cal);
  const auto mod = pump::apply_modulator_response(ideal, resp);
  const auto traj = opa::trajectory_from_pump(mod.trace, gain(c), l);
  const std::size_t n_phases = c.count("n_phases");
  const double step = c.num("phase_step_deg") * kPi / 180.0;
  const auto lo = homodyne::LoSchedule::uniform(n_phases, step, n);
  const auto frames = homodyne::simulate_frames(traj, det, lo, c.cfg.seed, c.sim());
  // As many reference frames as signal frames, pooled over mode positions, so
  // the normalization error is small against the tomography error bars.
  const auto ref = homodyne::simulate_vacuum_reference(det, frames.n_samples, frames.t0, n * n_phases, c.cfg.seed,
                                                       c.sim());

  c.emit("tm_awg.csv", to_text([&](auto& os) { io::write_awg_csv(os, prog, c.comments); }));
  c.emit("tm_pump.csv", to_text([&](auto& os) { io::write_power_csv(os, mod.trace, c.comments); }));

  estimation::TomographyOptions topts;
  topts.enforce_physical = c.flag("enforce_physical");
  json slots = json::array();
  const auto windows = pump::mode_windows(spec);
  for (std::size_t s = 0; s < spec.slots.size(); ++s) {
    dsp::ModeParams mp;
    mp.family = dsp::ModeFamily::tf_mode;
    mp.gamma = c.num("mode_gamma");
    mp.t_w = spec.mode_width_s;
    mp.t_c = windows[s].center_s;
    mp.dt = det.dt();
    const auto mode = dsp::make_mode(mp);
    const double scale = dsp::vacuum_ref_scale(ref, mode, true);
    const auto q = dsp::extract_quadratures(frames, mode, scale);
    estimation::TomographyInput in;
    for (std::size_t k = 0; k < n_phases; ++k) {
      in.groups.push_back({lo.entries[k].phase, std::vector<double>(q.begin() + static_cast<long>(k * n),
                                                                    q.begin() + static_cast<long>((k + 1) * n))});
    }
    const auto res = estimation::ml_gaussian_tomography(in, topts);

    core::SqueezeParams theory{0.0, 0.0, l};
    std::string label = "vacuum";
    if (const auto& t = spec.slots[s].target) {
      theory.r = core::r_from_pure_db(t->squeezing_db);
      theory.theta = t->quadrature == pump::Quadrature::x_squeezed ? 0.0 : 0.5 * kPi;
      label = t->quadrature == pump::Quadrature::x_squeezed ? "x" : "p";
    }
    const auto th_state = core::squeezed_state(theory);
    const auto th_ellipse = estimation::wigner_ellipse(th_state);
    json entry = {{"slot", s},
                  {"quadrature", label},
                  {"target_db", spec.slots[s].target ? spec.slots[s].target->squeezing_db : 0.0},
                  {"center_s", windows[s].center_s},
                  {"result", io::to_json(res)},
                  {"theory", {{"state", io::to_json(th_state)}, {"ellipse", io::to_json(th_ellipse)}}}};
    if (spec.slots[s].target) {
      double d = res.ellipse.angle_deg - th_ellipse.angle_deg;
      while (d > 90.0) d -= 180.0;
      while (d <= -90.0) d += 180.0;
      entry["angle_deviation_deg"] = d;
    }
    c.check("slot" + std::to_string(s) + "_physical", res.physical,
            "det=" + io::format_double(res.state.cov.determinant()));
    slots.push_back(entry);
  }
  c.emit_json("tomography.json", {{"slot_period_s", spec.period()}, {"n_phases", n_phases}, {"slots", slots}});
}

// ------------------------------------------------------------ epr

void run_epr(Context& c) {
  const auto det = detector(c);
  const auto resp = modulator(c);
  const double l = loss(c);
  const std::size_t n = c.cfg.n_frames;
  const auto& cal = c.calibration.calibration;
  const double duration = c.num("duration_s");
  const auto prog = pump::pad(pump::alternating_sign(c.num("amplitude_v"), c.num("half_period_s"), duration),
                              c.num("pad_s"), c.num("pad_s"));
  pump::validate(prog, cal);
  const auto ideal = pump::ideal_pump_power(prog, cal);
  const auto mod = pump::apply_modulator_response(ideal, resp);
  const auto traj = opa::trajectory_from_pump(mod.trace, gain(c), l);
  const homodyne::LoSchedule lo{{{0.0, n}, {0.5 * kPi, n}}};
  const auto frames = homodyne::simulate_frames(traj, det, lo, c.cfg.seed, c.sim());
  const auto ref = homodyne::simulate_vacuum_reference(det, frames.n_samples, frames.t0, 2 * n, c.cfg.seed, c.sim());

  estimation::EprOptions o;
  o.gamma = c.num("gamma");
  o.period = c.num("period_s");
  o.t_w = c.num("t_w_s");
  o.tc_nominal = 0.5 * duration;
  o.scan_half_width = c.num("scan_half_width_s");
  o.scan_step = c.num("scan_step_s");
  const auto rep = estimation::run_epr_analysis(homodyne::select_phase(frames, 0.0),
                                                homodyne::select_phase(frames, 0.5 * kPi), ref, o);

  c.emit("epr_awg.csv", to_text([&](auto& os) { io::write_awg_csv(os, prog, c.comments); }));
  c.emit("epr_pump.csv", to_text([&](auto& os) { io::write_power_csv(os, mod.trace, c.comments); }));
  json j = io::to_json(rep);
  j["n_frames"] = n;
  c.emit_json("epr_report.json", j);
  c.check("duan_finite", std::isfinite(rep.duan) && rep.duan > 0.0);
  c.check("variances_positive", rep.var_x_minus > 0.0 && rep.var_p_plus > 0.0);
}

// ------------------------------------------------------------ calibrate

void run_calibrate(Context& c) {
  std::vector<std::pair<double, double>> points;
  const auto& given = c.params.at("points");
  const bool synthetic = given.is_null();
  const double k_true = c.calibration.calibration.gain_coeff;
  if (synthetic) {
    std::seed_seq seq{static_cast<std::uint32_t>(c.cfg.seed), static_cast<std::uint32_t>(c.cfg.seed >> 32), 0x6361u};
    std::mt19937_64 eng(seq);
    std::normal_distribution<double> noise(0.0, c.num("gain_noise"));
    for (double p : c.params.at("powers_mw").get<std::vector<double>>()) {
      points.emplace_back(p, std::exp(2.0 * (k_true * std::sqrt(p) + noise(eng))));
    }
  } else {
    for (const auto& pt : given) {
      if (!pt.is_array() || pt.size() != 2) throw UsageError("points must be a list of [pump_mw, gain] pairs");
      points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
    }
  }
  const auto fit = opa::fit_gain_curve(points);

  io::CalibrationFile out = c.calibration;
  out.calibration.gain_coeff = fit.gain_coeff;
  out.gain_fit = fit;
  opa::LossBudget lb;
  lb.opa_internal = c.num("loss_budget.opa_internal");
  lb.propagation = c.num("loss_budget.propagation");
  lb.mode_matching = c.num("loss_budget.mode_matching");
  lb.photodiode = c.num("loss_budget.photodiode");
  opa::validate(lb);
  out.loss_budget = lb;
  pump::validate(out.calibration);

  c.emit("gain_curve.csv", to_text([&](auto& os) {
           for (const auto& line : c.comments) os << "# " << line << '\n';
           os << "pump_mw,gain,fitted_gain\n";
           for (const auto& [p, g] : points) {
             os << io::format_double(p) << ',' << io::format_double(g) << ','
                << io::format_double(std::exp(2.0 * fit.gain_coeff * std::sqrt(p))) << '\n';
           }
         }));
  c.emit_json("calibration.json", io::to_json(out));
  c.check("fit_residual_finite", std::isfinite(fit.fit_residual));
  if (synthetic) {
    c.check("fit_recovers_gain", std::abs(fit.gain_coeff / k_true - 1.0) < 0.05,
            "fitted " + io::format_double(fit.gain_coeff) + " vs " + io::format_double(k_true));
  }
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"spectrum", "waveforms", "tm_squeezing", "epr", "calibrate"};
  return names;
}

json default_params(const std::string& scenario) {
  json p = common_params();
  p.update(scenario_params(scenario));
  return p;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_text(path));
  } catch (const json::parse_error&) {
    throw UsageError("config " + path.string() + " is not valid JSON");
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  ScenarioConfig cfg;
  try {
    cfg.scenario = j.value("scenario", "");
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n_frames = j.value("n_frames", cfg.n_frames);
    if (j.contains("calibration") && !j["calibration"].is_null()) {
      cfg.calibration_path = path.parent_path() / j["calibration"].get<std::string>();
    }
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("params")) cfg.params = j["params"];
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (!cfg.params.is_object()) throw UsageError("config params must be an object");
  return cfg;
}

void apply_override(ScenarioConfig& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + kv + "'");
  const std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  json v = json::parse(raw, nullptr, false);
  if (v.is_discarded()) v = raw;
  cfg.params[key] = v;
}

json effective_config(const ScenarioConfig& cfg) {
  json params = default_params(cfg.scenario);
  for (const auto& [k, v] : cfg.params.items()) {
    if (!params.contains(k)) throw UsageError("unknown parameter '" + k + "' for scenario " + cfg.scenario);
    if (!compatible(params[k], v)) throw UsageError("parameter '" + k + "' has the wrong type");
    params[k] = v;
  }
  io::CalibrationFile cal;
  if (cfg.calibration_path) cal = io::load_calibration(*cfg.calibration_path);
  return {{"scenario", cfg.scenario},
          {"seed", cfg.seed},
          {"n_frames", cfg.n_frames},
          {"params", params},
          {"calibration", io::to_json(cal)}};
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

json error_json(const std::string& kind, const std::string& message) {
  return {{"status", "error"}, {"error", {{"kind", kind}, {"message", message}}}};
}

RunResult run(const ScenarioConfig& cfg) {
  const auto& names = scenario_names();
  if (std::find(names.begin(), names.end(), cfg.scenario) == names.end()) {
    throw UsageError("unknown scenario '" + cfg.scenario + "'");
  }
  const std::size_t min_frames = cfg.scenario == "calibrate" ? 0 : 100;
  if (cfg.n_frames < min_frames) throw UsageError("--frames must be at least 100");
  if (cfg.threads == 0) throw UsageError("--threads must be >= 1");

  const json eff = effective_config(cfg);
  Context c{cfg, eff.at("params"), {}, hex64(fnv1a64(eff.dump())), {}, {}, {}};
  if (cfg.calibration_path) c.calibration = io::load_calibration(*cfg.calibration_path);
  c.comments = {"seed=" + std::to_string(cfg.seed) + " config_hash=" + c.hash};
  std::filesystem::create_directories(cfg.output_dir);

  if (cfg.scenario == "spectrum") run_spectrum(c);
  else if (cfg.scenario == "waveforms") run_waveforms(c);
  else if (cfg.scenario == "tm_squeezing") run_tm_squeezing(c);
  else if (cfg.scenario == "epr") run_epr(c);
  else run_calibrate(c);

  RunResult res;
  res.checks = c.checks;
  const bool ok = std::all_of(c.checks.begin(), c.checks.end(), [](const Check& k) { return k.passed; });
  res.exit_code = ok ? 0 : 1;
  json files = json::array();
  for (const auto& [name, h] : c.files) {
    files.push_back({{"name", name}, {"fnv1a64", h}});
    res.files.push_back(name);
  }
  json checks = json::array();
  for (const auto& k : c.checks) checks.push_back({{"name", k.name}, {"passed", k.passed}, {"detail", k.detail}});
  res.manifest = {{"tool", "tmsqz"},
                  {"version", kToolVersion},
                  {"scenario", cfg.scenario},
                  {"seed", cfg.seed},
                  {"n_frames", cfg.n_frames},
                  {"config_hash", c.hash},
                  {"config", eff},
                  {"isa", std::string(kernels::isa_name(kernels::active_isa()))},
                  {"libraries",
                   {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"fftw", std::string(fftw_version)}}},
                  {"files", files},
                  {"checks", checks},
                  {"status", ok ? "ok" : "invariant_failure"}};
  io::write_json(cfg.output_dir / "manifest.json", res.manifest);
  res.files.push_back("manifest.json");
  return res;
}

}  // namespace tmsqz::cli

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "tmsqz/dsp_analysis.hpp"
#include "tmsqz/homodyne_sim.hpp"
#include "tmsqz/quantum_core.hpp"

using namespace tmsqz::dsp;
namespace homodyne = tmsqz::homodyne;
namespace opa = tmsqz::opa;

namespace {

// Closed-form inversion: u = e^{2r} = (A - 1)/(1 - S), L = 1 - (A - 1)(1 - S)/(A + S - 2).
double pure_db_closed(double s_db, double a_db) {
  const double s = std::pow(10.0, s_db / 10), a = std::pow(10.0, a_db / 10);
  return 10.0 * std::log10((a - 1.0) / (1.0 - s));
}

double loss_closed(double s_db, double a_db) {
  const double s = std::pow(10.0, s_db / 10), a = std::pow(10.0, a_db / 10);
  return 1.0 - (a - 1.0) * (1.0 - s) / (a + s - 2.0);
}

FrameSet white(std::size_t n_frames, std::size_t n_samples, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  FrameSet fs;
  fs.n_samples = n_samples;
  fs.phase_tags.assign(n_frames, 0.0);
  fs.data.resize(n_frames * n_samples);
  for (auto& v : fs.data) v = g(rng);
  return fs;
}

ModeParams epr_params(ModeFamily f) {
  ModeParams p;
  p.family = f;
  p.gamma = 5e6;
  p.period = 100e-9;
  p.t_w = 1000e-9;
  p.t_c = 500e-9;
  return p;
}

}  // namespace

TEST_SUITE("dsp") {

TEST_CASE("spectrum of a frame set against itself is exactly 0 dB") {
  const auto fs = white(40, 64, 1);
  const auto spec = average_spectrum(fs, fs);
  REQUIRE(spec.freqs.size() == 31);  // DC and Nyquist excluded
  CHECK(spec.freqs.front() == doctest::Approx(1e9 / 64));
  for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
    CHECK(spec.level_db[k] == 0.0);
    CHECK(spec.stderr_db[k] == 0.0);
    if (k > 0) CHECK(spec.freqs[k] > spec.freqs[k - 1]);
  }
}

TEST_CASE("spectrum input errors") {
  const auto fs = white(20, 64, 1);
  auto ref = white(20, 64, 2);
  CHECK_THROWS_AS(average_spectrum(fs, ref), std::invalid_argument);  // not a vacuum set
  ref.kind = homodyne::FrameKind::vacuum_reference;
  CHECK_NOTHROW(average_spectrum(fs, ref));
  auto shorter = white(20, 32, 3);
  shorter.kind = homodyne::FrameKind::vacuum_reference;
  CHECK_THROWS_AS(average_spectrum(fs, shorter), std::invalid_argument);
  ref.dt = 2e-9;
  CHECK_THROWS_AS(average_spectrum(fs, ref), std::invalid_argument);
}

TEST_CASE("constant squeezing gives the closed-form plateau") {
  homodyne::DetectorModel det;
  const double r = oracle::r_from_db(2.71);
  const auto traj = opa::constant_trajectory(r, 0.0, 0.183, 1024, det.dt());
  const auto fs = homodyne::simulate_frames(traj, det, 0.0, 2000, 3);
  const auto ref = homodyne::simulate_vacuum_reference(det, 1024, 0.0, 2000, 3);
  const auto spec = average_spectrum(fs, ref);
  const auto band = band_average(spec, 5e6, 100e6);
  CHECK(std::abs(band.level_db - oracle::to_db(oracle::variance(r, 0.0, 0.183, 0.0))) < 3.0 * band.std_error);
  CHECK(band.std_error > 0.0);
}

TEST_CASE("band_average") {
  SpectrumEstimate flat;
  for (int k = 1; k <= 20; ++k) {
    flat.freqs.push_back(k * 1e6);
    flat.level_db.push_back(0.0);
    flat.stderr_db.push_back(0.1);
  }
  const auto z = band_average(flat, 1e6, 10e6);
  CHECK(z.level_db == 0.0);
  CHECK(z.std_error == doctest::Approx(0.1 / std::sqrt(10.0)));
  for (auto& v : flat.level_db) v = -2.07;
  CHECK(band_average(flat, 2e6, 5e6).level_db == doctest::Approx(-2.07));
  CHECK_THROWS_AS(band_average(flat, 0.5e6, 10e6), std::invalid_argument);
  CHECK_THROWS_AS(band_average(flat, 15e6, 30e6), std::invalid_argument);
  CHECK_THROWS_AS(band_average(flat, 5e6, 5e6), std::invalid_argument);
  CHECK_THROWS_AS(band_average(flat, 5.2e6, 5.8e6), std::invalid_argument);
}

TEST_CASE("pure squeezing and loss from a measured pair") {
  const double s_db = oracle::to_db(oracle::variance(oracle::r_from_db(2.71), 0, 0.183, 0));
  const double a_db = oracle::to_db(oracle::variance(oracle::r_from_db(2.71), 0, 0.183, oracle::kPi / 2));
  CHECK(s_db == doctest::Approx(-2.071).epsilon(1e-3));
  CHECK(a_db == doctest::Approx(2.325).epsilon(1e-3));
  const auto e = estimate_pure_squeezing_and_loss(s_db, a_db);
  CHECK(std::abs(e.pure_db - 2.71) < 1e-6);
  CHECK(std::abs(e.loss - 0.183) < 1e-6);
  CHECK(e.r == doctest::Approx(oracle::r_from_db(2.71)).epsilon(1e-9));
  CHECK_FALSE(e.low_confidence);

  // Lossless: S = 1 / A.
  const auto pure = estimate_pure_squeezing_and_loss(-3.0, 3.0);
  CHECK(pure.loss == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  CHECK(pure.pure_db == doctest::Approx(3.0).epsilon(1e-9));

  const auto tiny = estimate_pure_squeezing_and_loss(-0.0001, 0.0001);
  CHECK(tiny.low_confidence);

  CHECK_THROWS_AS(estimate_pure_squeezing_and_loss(0.1, 2.0), std::domain_error);
  CHECK_THROWS_AS(estimate_pure_squeezing_and_loss(-2.0, -0.1), std::domain_error);
  CHECK_THROWS_AS(estimate_pure_squeezing_and_loss(-3.0, 2.0), std::domain_error);  // A S < 1
}

TEST_CASE("inversion matches the closed form and propagates errors") {
  for (auto [s_db, a_db] : {std::pair{-2.08, 2.31}, {-1.0, 4.0}, {-5.5, 9.0}}) {
    const auto e = estimate_pure_squeezing_and_loss(s_db, a_db, 0.015, 0.02);
    CHECK(e.pure_db == doctest::Approx(pure_db_closed(s_db, a_db)).epsilon(1e-9));
    CHECK(e.loss == doctest::Approx(loss_closed(s_db, a_db)).epsilon(1e-9));
    const double h = 1e-6;
    const double dps = (pure_db_closed(s_db + h, a_db) - pure_db_closed(s_db - h, a_db)) / (2 * h);
    const double dpa = (pure_db_closed(s_db, a_db + h) - pure_db_closed(s_db, a_db - h)) / (2 * h);
    const double dls = (loss_closed(s_db + h, a_db) - loss_closed(s_db - h, a_db)) / (2 * h);
    const double dla = (loss_closed(s_db, a_db + h) - loss_closed(s_db, a_db - h)) / (2 * h);
    CHECK(e.pure_db_se == doctest::Approx(std::hypot(0.015 * dps, 0.02 * dpa)).epsilon(1e-4));
    CHECK(e.loss_se == doctest::Approx(std::hypot(0.015 * dls, 0.02 * dla)).epsilon(1e-4));
  }
}

TEST_CASE("FIR design matches scipy firwin(255, 100 MHz, fs = 1 GHz)") {
  const auto h = design_fir_lowpass(255, 100e6, 1e9);
  REQUIRE(h.size() == 255);
  CHECK(h[127] == doctest::Approx(0.19999883322727058).epsilon(1e-12));
  CHECK(h[126] == doctest::Approx(0.18707043444112428).epsilon(1e-12));
  CHECK(h[100] == doctest::Approx(-0.010103944663576185).epsilon(1e-11));
  CHECK(h[0] == doctest::Approx(-0.00019069538605775621).epsilon(1e-10));
  CHECK(h[10] == doctest::Approx(-0.00024322448172180334).epsilon(1e-10));
  CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == doctest::Approx(h[254 - i]).epsilon(1e-15));
  CHECK(oracle::to_db(oracle::fir_power(h, 2 * oracle::kPi * 0.2)) / 2 < -40.0);
  CHECK_THROWS_AS(design_fir_lowpass(254, 100e6, 1e9), std::invalid_argument);
  CHECK_THROWS_AS(design_fir_lowpass(255, 600e6, 1e9), std::invalid_argument);
}

TEST_CASE("FIR low-pass: DC passes, 200 MHz is suppressed, time axis stays aligned") {
  FrameSet fs;
  fs.n_samples = 1000;
  fs.phase_tags = {0.0, 0.0, 0.0};
  fs.data.resize(3000);
  for (std::size_t i = 0; i < 1000; ++i) {
    fs.data[i] = 1.0;
    fs.data[1000 + i] = std::cos(2 * oracle::kPi * 0.2 * static_cast<double>(i));
    fs.data[2000 + i] = i == 500 ? 1.0 : 0.0;
  }
  const auto out = fir_lowpass(fs);
  double worst = 0.0;
  for (std::size_t i = 127; i < 873; ++i) {
    CHECK(out.frame(0)[i] == doctest::Approx(1.0).epsilon(1e-12));
    worst = std::max(worst, std::abs(out.frame(1)[i]));
  }
  CHECK(20 * std::log10(worst) < -40.0);
  // The impulse response peaks at the impulse: group delay compensated.
  const auto f2 = out.frame(2);
  CHECK(std::max_element(f2.begin(), f2.end()) - f2.begin() == 500);
  CHECK_THROWS_AS(fir_lowpass(fs, 100), std::invalid_argument);
}

TEST_CASE("pointwise variance") {
  const auto a = white(400, 16, 1, 2.0);
  auto ref = white(400, 16, 2, 1.0);
  const auto tr = pointwise_variance(a, ref);
  CHECK(tr.vacuum_level == doctest::Approx(1.0).epsilon(0.05));
  for (std::size_t i = 0; i < 16; ++i) CHECK(tr.std_error[i] > 0.0);
  const double mean = std::accumulate(tr.variance.begin(), tr.variance.end(), 0.0) / 16.0;
  CHECK(mean == doctest::Approx(4.0).epsilon(0.05));
  const auto few = pointwise_variance(white(12, 16, 3), ref);
  CHECK(few.std_error[0] == 0.0);
  CHECK_THROWS_AS(pointwise_variance(white(1, 16, 3), ref), std::invalid_argument);
}

TEST_CASE("tf_mode: normalized, odd about t_c, zero at the centre") {
  ModeParams p;
  p.t_c = 200e-9;
  const auto m = make_mode(p);
  REQUIRE(m.weights.size() == 31);
  CHECK(m.t0 == doctest::Approx(185e-9));
  CHECK(m.t_end() == doctest::Approx(215e-9));
  CHECK(m.weights[15] == 0.0);
  for (std::size_t i = 0; i < 15; ++i) CHECK(m.weights[i] == doctest::Approx(-m.weights[30 - i]).epsilon(1e-14));
  double norm = 0.0;
  for (double w : m.weights) norm += w * w * m.dt;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(m.warnings.empty());
}

TEST_CASE("f and g families: disjoint f, beam-splitter identities, orthogonality") {
  const auto f1 = make_mode(epr_params(ModeFamily::f1));
  const auto f2 = make_mode(epr_params(ModeFamily::f2));
  const auto g1 = make_mode(epr_params(ModeFamily::g1));
  const auto g2 = make_mode(epr_params(ModeFamily::g2));
  for (std::size_t i = 0; i < f1.weights.size(); ++i) {
    CHECK(f1.weights[i] * f2.weights[i] == 0.0);
    CHECK(std::abs(g1.weights[i] - (f1.weights[i] + f2.weights[i]) / std::sqrt(2.0)) < 1e-12 * 1e4);
    CHECK(std::abs(g2.weights[i] - (-f1.weights[i] + f2.weights[i]) / std::sqrt(2.0)) < 1e-12 * 1e4);
  }
  CHECK(inner_product(f1, f2) == 0.0);
  CHECK(std::abs(inner_product(g1, g2)) < 1e-12);
  CHECK(inner_product(g1, g1) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(family_name(ModeFamily::g2) == "g2");
  // f1 lives on the first half of each period measured from t_c.
  const std::size_t c = (f1.weights.size() - 1) / 2;
  CHECK(f1.weights[c + 10] > 0.0);
  CHECK(f2.weights[c + 60] > 0.0);
  CHECK(f1.weights[c + 60] == 0.0);
}

TEST_CASE("mode parameter checks and the bin-overlap warning") {
  auto p = epr_params(ModeFamily::g1);
  CHECK_FALSE(make_mode(p).warnings.empty());  // gamma T / pi = 0.16
  p.gamma = 2e6;
  CHECK(make_mode(p).warnings.empty());
  p.gamma = 0.0;
  CHECK_THROWS_AS(make_mode(p), std::invalid_argument);
  p = epr_params(ModeFamily::g2);
  p.t_w = 0.0;
  CHECK_THROWS_AS(make_mode(p), std::invalid_argument);
  p = epr_params(ModeFamily::f1);
  p.period = 0.0;
  CHECK_THROWS_AS(make_mode(p), std::invalid_argument);
  p.family = ModeFamily::custom;
  CHECK_THROWS_AS(make_mode(p), std::invalid_argument);
}

TEST_CASE("custom modes and grid alignment") {
  const auto m = custom_mode(1e-9, 10e-9, {1.0, 2.0, 2.0, 1.0});
  double norm = 0.0;
  for (double w : m.weights) norm += w * w * 1e-9;
  CHECK(norm == doctest::Approx(1.0));
  CHECK(inner_product(m, m) == doctest::Approx(1.0));
  const auto shifted = custom_mode(1e-9, 10.5e-9, {1.0, 1.0});
  CHECK_THROWS_AS(inner_product(m, shifted), std::invalid_argument);
  const auto far = custom_mode(1e-9, 100e-9, {1.0, 1.0});
  CHECK(inner_product(m, far) == 0.0);
  CHECK_THROWS_AS(custom_mode(1e-9, 0.0, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(custom_mode(1e-9, 0.0, {}), std::invalid_argument);
}

TEST_CASE("quadrature extraction") {
  FrameSet fs;
  fs.t0 = -5e-9;
  fs.n_samples = 20;
  fs.phase_tags = {0.0};
  fs.data.assign(20, 0.0);
  for (std::size_t i = 0; i < 20; ++i) fs.data[i] = static_cast<double>(i);
  const auto m = custom_mode(1e-9, 0.0, {1.0, 1.0});  // samples 5 and 6
  const double w = 1.0 / std::sqrt(2e-9);
  CHECK(extract_quadrature(fs.frame(0), fs.t0, fs.dt, m) == doctest::Approx(1e-9 * w * 11.0));
  CHECK(extract_quadratures(fs, m, 2.0)[0] == doctest::Approx(2e-9 * w * 11.0));
  const auto late = custom_mode(1e-9, 14e-9, {1.0, 1.0});
  CHECK_THROWS_AS(extract_quadrature(fs.frame(0), fs.t0, fs.dt, late), std::invalid_argument);
  const auto early = custom_mode(1e-9, -6e-9, {1.0, 1.0});
  CHECK_THROWS_AS(extract_quadrature(fs.frame(0), fs.t0, fs.dt, early), std::invalid_argument);
  CHECK_THROWS_AS(extract_quadrature(fs.frame(0), fs.t0, 2e-9, m), std::invalid_argument);
}

TEST_CASE("vacuum-normalized quadratures: unit vacuum, closed-form squeezing") {
  homodyne::DetectorModel det;
  const double r = oracle::r_from_db(2.71);
  const std::size_t n = 5000;
  const auto traj = opa::constant_trajectory(r, 0.0, 0.183, 200, det.dt());
  const auto fs = homodyne::simulate_frames(traj, det, 0.0, n, 4);
  const auto ref = homodyne::simulate_vacuum_reference(det, 200, 0.0, n, 4);
  ModeParams p;
  p.t_c = 100e-9;
  const auto mode = make_mode(p);
  const double scale = vacuum_ref_scale(ref, mode);
  const double pooled = vacuum_ref_scale(ref, mode, true);
  const double se1 = std::sqrt(2.0 / (n - 1));
  CHECK(tmsqz::core::sample_variance(extract_quadratures(ref, mode, scale)) == doctest::Approx(1.0).epsilon(1e-12));
  // Pooled scale: 6 placements of the mode, so a ~sqrt(6) smaller error.
  CHECK(std::abs(scale * scale / (pooled * pooled) - 1.0) < 3.0 * se1 * std::sqrt(1.0 + 1.0 / 6.0));
  const double v = tmsqz::core::sample_variance(extract_quadratures(fs, mode, pooled));
  const double target = oracle::variance(r, 0.0, 0.183, 0.0);
  CHECK(std::abs(v - target) < 3.0 * target * se1 * std::sqrt(1.0 + 1.0 / 6.0));
  CHECK_THROWS_AS(vacuum_ref_scale(homodyne::simulate_vacuum_reference(det, 20, 0.0, 10, 1), mode, true),
                  std::invalid_argument);
}

TEST_CASE("mode spectra") {
  const auto g1 = mode_spectrum(make_mode(epr_params(ModeFamily::g1)));
  const auto g2 = mode_spectrum(make_mode(epr_params(ModeFamily::g2)));
  CHECK(g1.energy == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g2.energy == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(g1.peak_freq) < 0.05e6);
  CHECK(std::abs(g1.center_freq) < 0.2e6);
  // |g~| of a Gaussian envelope: HWHM gamma sqrt(ln 2) / pi.
  CHECK(g1.hwhm == doctest::Approx(5e6 * std::sqrt(std::log(2.0)) / oracle::kPi).epsilon(0.02));
  CHECK(g1.hwhm_power == doctest::Approx(5e6 * std::sqrt(std::log(2.0) / 2.0) / oracle::kPi).epsilon(0.02));
  CHECK(g2.peak_freq == doctest::Approx(10e6).epsilon(0.02));
  CHECK(g2.center_freq == doctest::Approx(10e6).epsilon(0.02));
  CHECK(g1.out_of_band_fraction < 1e-6);
  CHECK(g2.out_of_band_fraction < 1e-6);
  ModeParams p;
  const auto tf = mode_spectrum(make_mode(p), 1e6);
  CHECK(tf.energy == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(tf.peak_freq > 1e6);
}

}  // TEST_SUITE

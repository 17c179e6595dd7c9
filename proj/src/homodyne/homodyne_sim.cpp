#include "tmsqz/homodyne_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include "tmsqz/kernels.hpp"
#include "tmsqz/quantum_core.hpp"

namespace tmsqz::homodyne {

namespace {

constexpr std::size_t kWarmup = 64;
constexpr std::uint32_t kSignalTag = 0x5157u;
constexpr std::uint32_t kVacuumTag = 0x7661u;

std::mt19937_64 frame_engine(std::uint64_t seed, std::uint32_t tag, std::uint64_t frame) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag,
                    static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(frame >> 32)};
  return std::mt19937_64(seq);
}

class BiquadState {
 public:
  explicit BiquadState(const Biquad& c) : c_(c) {}
  double step(double x) {
    const double y = c_.b0 * x + c_.b1 * x1_ + c_.b2 * x2_ - c_.a1 * y1_ - c_.a2 * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  Biquad c_;
  double x1_ = 0.0, x2_ = 0.0, y1_ = 0.0, y2_ = 0.0;
};

// Linear resampling of the trajectory onto the detector grid.
opa::SqueezerTrajectory on_detector_grid(const opa::SqueezerTrajectory& traj, double dt) {
  if (std::abs(traj.dt - dt) <= 1e-9 * dt) return traj;
  const double span = traj.dt * static_cast<double>(traj.size() - 1);
  const auto n = static_cast<std::size_t>(std::floor(span / dt + 1e-9)) + 1;
  opa::SqueezerTrajectory out;
  out.dt = dt;
  out.t0 = traj.t0;
  out.loss = traj.loss;
  out.r.resize(n);
  out.theta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = static_cast<double>(i) * dt / traj.dt;
    const auto j = std::min(static_cast<std::size_t>(pos), traj.size() - 1);
    const double f = pos - static_cast<double>(j);
    const std::size_t k = std::min(j + 1, traj.size() - 1);
    out.r[i] = traj.r[j] + f * (traj.r[k] - traj.r[j]);
    // Phase is piecewise constant; take the nearest sample.
    out.theta[i] = f < 0.5 ? traj.theta[j] : traj.theta[k];
  }
  return out;
}

struct Job {
  const DetectorModel* det;
  Biquad filter;
  double electronic_sigma;
  std::uint64_t seed;
  std::uint32_t tag;
  std::size_t n_samples;
};

// One frame: white noise shaped by the instantaneous variance, then the
// detector filter, then electronic noise.
void fill_frame(const Job& job, std::span<const double> variance, std::uint64_t frame_index,
                std::span<double> out) {
  auto engine = frame_engine(job.seed, job.tag, frame_index);
  std::normal_distribution<double> normal(0.0, 1.0);
  BiquadState filt(job.filter);
  const double warm_sd = std::sqrt(variance.front());
  for (std::size_t i = 0; i < kWarmup; ++i) filt.step(warm_sd * normal(engine));

  std::vector<double> z(job.n_samples);
  for (double& v : z) v = normal(engine);
  kernels::scale_by_sqrt(z, variance, out);
  for (double& v : out) v = filt.step(v);
  if (job.electronic_sigma > 0.0) {
    for (double& v : out) v += job.electronic_sigma * normal(engine);
  }
}

void run_frames(const Job& job, const std::vector<std::vector<double>>& variances,
                const std::vector<std::size_t>& variance_of_frame, FrameSet& fs, unsigned threads) {
  const std::size_t n_frames = variance_of_frame.size();
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t f = begin; f < end; ++f) {
      fill_frame(job, variances[variance_of_frame[f]], f, fs.frame(f));
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_frames)));
  if (threads == 1) {
    worker(0, n_frames);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back(worker, t * n_frames / threads, (t + 1) * n_frames / threads);
  }
}

}  // namespace

void validate(const DetectorModel& det) {
  if (!(det.sample_rate_hz > 0.0)) throw std::invalid_argument("detector: sample_rate must be > 0");
  if (det.filter_kind != DetectorModel::Filter::none &&
      !(det.bandwidth_hz > 0.0 && det.bandwidth_hz < 0.5 * det.sample_rate_hz)) {
    throw std::invalid_argument("detector: bandwidth must be in (0, sample_rate / 2)");
  }
  if (std::isnan(det.clearance_db)) throw std::invalid_argument("detector: clearance is NaN");
}

Biquad detector_filter(const DetectorModel& det) {
  validate(det);
  Biquad c;
  if (det.filter_kind == DetectorModel::Filter::none) return c;
  const double k = std::tan(std::numbers::pi * det.bandwidth_hz / det.sample_rate_hz);
  if (det.filter_kind == DetectorModel::Filter::first_order) {
    c.b0 = k / (1.0 + k);
    c.b1 = c.b0;
    c.a1 = (k - 1.0) / (k + 1.0);
    return c;
  }
  const double sqrt2 = std::numbers::sqrt2;
  const double norm = 1.0 / (1.0 + sqrt2 * k + k * k);
  c.b0 = k * k * norm;
  c.b1 = 2.0 * c.b0;
  c.b2 = c.b0;
  c.a1 = 2.0 * (k * k - 1.0) * norm;
  c.a2 = (1.0 - sqrt2 * k + k * k) * norm;
  return c;
}

std::vector<double> impulse_response(const DetectorModel& det, std::size_t n) {
  BiquadState filt(detector_filter(det));
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = filt.step(i == 0 ? 1.0 : 0.0);
  return h;
}

double noise_gain(const DetectorModel& det) {
  const auto h = impulse_response(det, 4096);
  double s = 0.0;
  for (double v : h) s += v * v;
  return s;
}

LoSchedule LoSchedule::uniform(std::size_t n_phases, double step, std::size_t frames_per_phase) {
  LoSchedule lo;
  for (std::size_t k = 0; k < n_phases; ++k) {
    lo.entries.push_back({static_cast<double>(k) * step, frames_per_phase});
  }
  return lo;
}

std::size_t LoSchedule::total_frames() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.n_frames;
  return n;
}

void validate(const FrameSet& fs) {
  if (!(fs.dt > 0.0)) throw std::invalid_argument("frameset: dt must be > 0");
  if (fs.data.size() != fs.n_frames() * fs.n_samples) {
    throw std::invalid_argument("frameset: data size does not match n_frames x n_samples");
  }
  for (double v : fs.data) {
    if (!std::isfinite(v)) throw std::invalid_argument("frameset: non-finite sample");
  }
}

FrameSet simulate_frames(const opa::SqueezerTrajectory& traj_in, const DetectorModel& det,
                         const LoSchedule& lo, std::uint64_t seed, SimOptions opts) {
  validate(det);
  if (traj_in.size() == 0) throw std::invalid_argument("simulate_frames: empty trajectory");
  if (traj_in.theta.size() != traj_in.size()) {
    throw std::invalid_argument("simulate_frames: trajectory arrays differ in length");
  }
  if (lo.entries.empty() || lo.total_frames() == 0) {
    throw std::invalid_argument("simulate_frames: n_frames must be > 0");
  }
  for (const auto& e : lo.entries) {
    if (e.n_frames == 0) throw std::invalid_argument("simulate_frames: LO entry with zero frames");
    if (!(e.phase >= 0.0 && e.phase < 2.0 * std::numbers::pi)) {
      throw std::invalid_argument("simulate_frames: LO phase must be in [0, 2 pi)");
    }
  }
  const auto traj = on_detector_grid(traj_in, det.dt());
  const double scale2 = 1.0 / noise_gain(det);

  std::vector<std::vector<double>> variances;
  std::vector<std::size_t> variance_of_frame;
  FrameSet fs;
  fs.dt = det.dt();
  fs.t0 = traj.t0;
  fs.n_samples = traj.size();
  fs.kind = FrameKind::signal;
  fs.rng_seed = seed;
  for (const auto& e : lo.entries) {
    std::vector<double> v(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
      v[i] = scale2 * core::variance_at_phase({traj.r[i], traj.theta[i], traj.loss}, e.phase);
    }
    variances.push_back(std::move(v));
    variance_of_frame.insert(variance_of_frame.end(), e.n_frames, variances.size() - 1);
    fs.phase_tags.insert(fs.phase_tags.end(), e.n_frames, e.phase);
  }
  fs.data.resize(fs.n_frames() * fs.n_samples);

  const Job job{&det, detector_filter(det),
                std::isinf(det.clearance_db) ? 0.0 : std::pow(10.0, -det.clearance_db / 20.0), seed,
                kSignalTag, fs.n_samples};
  run_frames(job, variances, variance_of_frame, fs, opts.threads);
  return fs;
}

FrameSet simulate_frames(const opa::SqueezerTrajectory& traj, const DetectorModel& det, double phase,
                         std::size_t n_frames, std::uint64_t seed, SimOptions opts) {
  return simulate_frames(traj, det, LoSchedule::single(phase, n_frames), seed, opts);
}

FrameSet simulate_vacuum_reference(const DetectorModel& det, std::size_t n_samples, double t0,
                                   std::size_t n_frames, std::uint64_t seed, SimOptions opts) {
  validate(det);
  if (n_frames == 0) throw std::invalid_argument("simulate_vacuum_reference: n_frames must be > 0");
  if (n_samples == 0) throw std::invalid_argument("simulate_vacuum_reference: n_samples must be > 0");
  FrameSet fs;
  fs.dt = det.dt();
  fs.t0 = t0;
  fs.n_samples = n_samples;
  fs.kind = FrameKind::vacuum_reference;
  fs.rng_seed = seed;
  fs.phase_tags.assign(n_frames, 0.0);
  fs.data.resize(n_frames * n_samples);
  const std::vector<std::vector<double>> variances{std::vector<double>(n_samples, 1.0 / noise_gain(det))};
  const std::vector<std::size_t> variance_of_frame(n_frames, 0);
  const Job job{&det, detector_filter(det),
                std::isinf(det.clearance_db) ? 0.0 : std::pow(10.0, -det.clearance_db / 20.0), seed,
                kVacuumTag, n_samples};
  run_frames(job, variances, variance_of_frame, fs, opts.threads);
  return fs;
}

FrameSet select_phase(const FrameSet& fs, double phase, double tol) {
  FrameSet out;
  out.dt = fs.dt;
  out.t0 = fs.t0;
  out.n_samples = fs.n_samples;
  out.kind = fs.kind;
  out.rng_seed = fs.rng_seed;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t f = 0; f < fs.n_frames(); ++f) {
    double d = std::fmod(fs.phase_tags[f] - phase, two_pi);
    if (d < 0.0) d += two_pi;
    if (d <= tol || two_pi - d <= tol) {
      out.phase_tags.push_back(fs.phase_tags[f]);
      const auto fr = fs.frame(f);
      out.data.insert(out.data.end(), fr.begin(), fr.end());
    }
  }
  return out;
}

}  // namespace tmsqz::homodyne

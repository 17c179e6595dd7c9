#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tmsqz/dsp_analysis.hpp"
#include "tmsqz/kernels.hpp"
#include "tmsqz/quantum_core.hpp"

namespace tmsqz::dsp {

namespace {

void normalize(std::vector<double>& w, double dt) {
  double s = 0.0;
  for (double v : w) s += v * v;
  if (!(s > 0.0)) throw std::invalid_argument("mode: weights are identically zero");
  const double c = 1.0 / std::sqrt(s * dt);
  for (double& v : w) v *= c;
}

// Square wave h(t; a, b): a on [nT, (n + 1/2)T), b on [(n + 1/2)T, (n + 1)T).
// Boundaries that are exact on the grid are snapped to avoid rounding flips.
bool first_half(double t, double period) {
  double x = t / period;
  const double twice = 2.0 * x;
  if (std::abs(twice - std::round(twice)) < 1e-9) x = std::round(twice) / 2.0;
  return x - std::floor(x) < 0.5;
}

// Integer offset of grid `t0` on a frame grid starting at `frame_t0`.
long aligned_offset(double t0, double frame_t0, double dt) {
  const double pos = (t0 - frame_t0) / dt;
  const double idx = std::round(pos);
  if (std::abs(pos - idx) > 1e-6) throw std::invalid_argument("mode: not aligned with the sample grid");
  return static_cast<long>(idx);
}

}  // namespace

std::string family_name(ModeFamily f) {
  switch (f) {
    case ModeFamily::tf_mode: return "tf_mode";
    case ModeFamily::f1: return "f1";
    case ModeFamily::f2: return "f2";
    case ModeFamily::g1: return "g1";
    case ModeFamily::g2: return "g2";
    case ModeFamily::custom: return "custom";
  }
  return "unknown";
}

TemporalMode make_mode(const ModeParams& p) {
  if (p.family == ModeFamily::custom) throw std::invalid_argument("make_mode: use custom_mode for user weights");
  if (!(p.gamma > 0.0)) throw std::invalid_argument("make_mode: gamma must be > 0");
  if (!(p.t_w > 0.0)) throw std::invalid_argument("make_mode: t_w must be > 0");
  if (!(p.dt > 0.0)) throw std::invalid_argument("make_mode: dt must be > 0");
  const bool periodic = p.family != ModeFamily::tf_mode;
  if (periodic && !(p.period > 0.0)) throw std::invalid_argument("make_mode: period T must be > 0");

  TemporalMode mode;
  mode.dt = p.dt;
  mode.params = p;
  const auto half = static_cast<long>(std::floor(0.5 * p.t_w / p.dt + 1e-9));
  mode.t0 = p.t_c - static_cast<double>(half) * p.dt;
  const std::size_t n = static_cast<std::size_t>(2 * half + 1);

  if (p.family == ModeFamily::tf_mode) {
    mode.weights.resize(n);
    for (long k = -half; k <= half; ++k) {
      const double t = static_cast<double>(k) * p.dt;
      mode.weights[static_cast<std::size_t>(k + half)] = t * std::exp(-p.gamma * p.gamma * t * t);
    }
    normalize(mode.weights, p.dt);
    return mode;
  }

  if (p.gamma * p.period / std::numbers::pi >= 0.1) {
    mode.warnings.push_back("gamma T / pi >= 0.1: frequency bins overlap noticeably");
  }
  std::vector<double> f1(n, 0.0), f2(n, 0.0);
  for (long k = -half; k <= half; ++k) {
    const double t = static_cast<double>(k) * p.dt;
    const double env = std::exp(-p.gamma * p.gamma * t * t);
    (first_half(t, p.period) ? f1 : f2)[static_cast<std::size_t>(k + half)] = env;
  }
  normalize(f1, p.dt);
  normalize(f2, p.dt);
  mode.weights.resize(n);
  const double s = 1.0 / std::numbers::sqrt2;
  for (std::size_t i = 0; i < n; ++i) {
    switch (p.family) {
      case ModeFamily::f1: mode.weights[i] = f1[i]; break;
      case ModeFamily::f2: mode.weights[i] = f2[i]; break;
      case ModeFamily::g1: mode.weights[i] = s * (f1[i] + f2[i]); break;
      case ModeFamily::g2: mode.weights[i] = s * (-f1[i] + f2[i]); break;
      default: break;
    }
  }
  return mode;
}

TemporalMode custom_mode(double dt, double t0, std::vector<double> weights) {
  if (!(dt > 0.0)) throw std::invalid_argument("custom_mode: dt must be > 0");
  if (weights.empty()) throw std::invalid_argument("custom_mode: no weights");
  TemporalMode mode;
  mode.dt = dt;
  mode.t0 = t0;
  mode.params.family = ModeFamily::custom;
  mode.params.dt = dt;
  mode.params.t_c = t0 + 0.5 * dt * static_cast<double>(weights.size() - 1);
  mode.params.t_w = dt * static_cast<double>(weights.size() - 1);
  normalize(weights, dt);
  mode.weights = std::move(weights);
  return mode;
}

double inner_product(const TemporalMode& a, const TemporalMode& b) {
  if (std::abs(a.dt - b.dt) > 1e-12 * a.dt) throw std::invalid_argument("inner_product: dt differs");
  const long off = aligned_offset(b.t0, a.t0, a.dt);  // b[0] sits at a[off]
  const long a_begin = std::max(0L, off);
  const long a_end = std::min(static_cast<long>(a.weights.size()), off + static_cast<long>(b.weights.size()));
  if (a_end <= a_begin) return 0.0;
  const auto n = static_cast<std::size_t>(a_end - a_begin);
  return a.dt * kernels::dot(std::span(a.weights).subspan(static_cast<std::size_t>(a_begin), n),
                             std::span(b.weights).subspan(static_cast<std::size_t>(a_begin - off), n));
}

double extract_quadrature(std::span<const double> frame, double frame_t0, double frame_dt,
                          const TemporalMode& mode, double ref_scale) {
  if (std::abs(frame_dt - mode.dt) > 1e-12 * frame_dt) {
    throw std::invalid_argument("extract_quadrature: mode and frame sample spacing differ");
  }
  const long off = aligned_offset(mode.t0, frame_t0, frame_dt);
  if (off < 0 || off + static_cast<long>(mode.weights.size()) > static_cast<long>(frame.size())) {
    throw std::invalid_argument("extract_quadrature: mode support extends beyond the frame");
  }
  const auto seg = frame.subspan(static_cast<std::size_t>(off), mode.weights.size());
  return ref_scale * mode.dt * kernels::dot(seg, mode.weights);
}

std::vector<double> extract_quadratures(const FrameSet& fs, const TemporalMode& mode, double ref_scale) {
  std::vector<double> q(fs.n_frames());
  for (std::size_t f = 0; f < fs.n_frames(); ++f) {
    q[f] = extract_quadrature(fs.frame(f), fs.t0, fs.dt, mode, ref_scale);
  }
  return q;
}

double vacuum_ref_scale(const FrameSet& ref, const TemporalMode& mode, bool pool_stationary) {
  if (ref.n_frames() < 2) throw std::invalid_argument("vacuum_ref_scale: need at least 2 frames");
  double v = 0.0;
  if (!pool_stationary) {
    v = core::sample_variance(extract_quadratures(ref, mode, 1.0));
  } else {
    const std::size_t len = mode.weights.size();
    if (len > ref.n_samples) throw std::invalid_argument("vacuum_ref_scale: mode longer than the frame");
    std::size_t n_pos = 0;
    std::vector<double> q(ref.n_frames());
    for (std::size_t off = 0; off + len <= ref.n_samples; off += len, ++n_pos) {
      for (std::size_t f = 0; f < ref.n_frames(); ++f) {
        q[f] = mode.dt * kernels::dot(ref.frame(f).subspan(off, len), mode.weights);
      }
      v += core::sample_variance(q);
    }
    v /= static_cast<double>(n_pos);
  }
  if (!(v > 0.0)) throw std::invalid_argument("vacuum_ref_scale: vacuum quadratures have zero variance");
  return 1.0 / std::sqrt(v);
}

}  // namespace tmsqz::dsp

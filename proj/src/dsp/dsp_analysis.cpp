#include "tmsqz/dsp_analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "tmsqz/kernels.hpp"
#include "tmsqz/quantum_core.hpp"
#include "tmsqz/stats.hpp"

namespace tmsqz::dsp {

namespace {

struct Moments {
  std::vector<double> sum, sumsq;
  std::size_t n = 0;
  explicit Moments(std::size_t len) : sum(len, 0.0), sumsq(len, 0.0) {}
  double variance(std::size_t i) const {
    const double nn = static_cast<double>(n);
    return (sumsq[i] - sum[i] * sum[i] / nn) / (nn - 1.0);
  }
};

std::vector<Moments> split_moments(const FrameSet& fs, std::size_t n_sets) {
  const auto ranges = stats::split_ranges(fs.n_frames(), n_sets);
  std::vector<Moments> out(n_sets, Moments(fs.n_samples));
  for (std::size_t s = 0; s < n_sets; ++s) {
    for (std::size_t f = ranges[s].first; f < ranges[s].second; ++f) {
      kernels::accumulate_moments(fs.frame(f), out[s].sum, out[s].sumsq);
    }
    out[s].n = ranges[s].second - ranges[s].first;
  }
  return out;
}

Moments merge(const std::vector<Moments>& parts) {
  Moments all(parts.front().sum.size());
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < all.sum.size(); ++i) {
      all.sum[i] += p.sum[i];
      all.sumsq[i] += p.sumsq[i];
    }
    all.n += p.n;
  }
  return all;
}

}  // namespace

VarianceTrace pointwise_variance(const FrameSet& fs, const FrameSet& ref, int n_splits) {
  if (fs.n_frames() < 2 || ref.n_frames() < 2) {
    throw std::invalid_argument("pointwise_variance: need at least 2 frames");
  }
  if (std::abs(fs.dt - ref.dt) > 1e-12 * fs.dt) {
    throw std::invalid_argument("pointwise_variance: sample spacing differs from reference");
  }
  if (n_splits < 1) throw std::invalid_argument("pointwise_variance: n_splits must be >= 1");

  const auto vac = merge(split_moments(ref, 1));
  double vac_level = 0.0;
  for (std::size_t i = 0; i < ref.n_samples; ++i) vac_level += vac.variance(i);
  vac_level /= static_cast<double>(ref.n_samples);

  const auto k = static_cast<std::size_t>(n_splits);
  const bool with_se = fs.n_frames() >= 2 * k && k >= 2;
  const auto parts = split_moments(fs, with_se ? k : 1);
  const auto all = merge(parts);

  VarianceTrace out;
  out.dt = fs.dt;
  out.t0 = fs.t0;
  out.vacuum_level = vac_level;
  out.variance.resize(fs.n_samples);
  out.std_error.assign(fs.n_samples, 0.0);
  std::vector<double> per_split(parts.size());
  for (std::size_t i = 0; i < fs.n_samples; ++i) {
    out.variance[i] = all.variance(i) / vac_level;
    if (with_se) {
      for (std::size_t s = 0; s < parts.size(); ++s) per_split[s] = parts[s].variance(i) / vac_level;
      out.std_error[i] = stats::split_stderr(per_split);
    }
  }
  return out;
}

namespace {

struct Inversion {
  double r;
  double loss;
};

// With u = e^{2r}:  A - 1 = (1 - L)(u - 1)  and  1 - S = (1 - L)(u - 1)/u,
// so u = (A - 1)/(1 - S) and L = 1 - (A - 1)/(u - 1). The root in r of
// (A - 1) - (1 - S) e^{2r} is found by bisection (it is strictly decreasing).
Inversion invert(double s_db, double a_db) {
  const double s = std::pow(10.0, s_db / 10.0);
  const double a = std::pow(10.0, a_db / 10.0);
  if (!(s > 0.0 && s < 1.0 && a > 1.0)) {
    throw std::domain_error("estimate_pure_squeezing_and_loss: no squeezing (need A > 1 > S > 0)");
  }
  if (a * s < 1.0 - 1e-12) {
    throw std::domain_error("estimate_pure_squeezing_and_loss: infeasible pair (A S < 1 implies negative loss)");
  }
  auto g = [&](double r) { return (a - 1.0) - (1.0 - s) * std::exp(2.0 * r); };
  double lo = 0.0;
  double hi = 1.0;
  while (g(hi) > 0.0) hi *= 2.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  const double r = 0.5 * (lo + hi);
  const double u = std::exp(2.0 * r);
  double loss = 1.0 - (a - 1.0) / (u - 1.0);
  if (loss < 0.0 && loss > -1e-9) loss = 0.0;
  return {r, loss};
}

}  // namespace

PureSqueezingEstimate estimate_pure_squeezing_and_loss(double s_db, double a_db, double s_se, double a_se) {
  const auto base = invert(s_db, a_db);
  PureSqueezingEstimate out;
  out.r = base.r;
  out.pure_db = core::pure_db_from_r(base.r);
  out.loss = base.loss;
  out.low_confidence = base.r < 1e-3;

  // d(output)/d(input) by central differences, falling back to one side near
  // the feasibility boundary.
  auto derivative = [&](bool wrt_s) {
    const double h = 1e-5;
    auto eval = [&](double d) {
      return wrt_s ? invert(s_db + d, a_db) : invert(s_db, a_db + d);
    };
    auto diff = [&](const Inversion& p, const Inversion& m, double span) {
      return std::pair{(core::pure_db_from_r(p.r) - core::pure_db_from_r(m.r)) / span,
                       (p.loss - m.loss) / span};
    };
    try {
      return diff(eval(h), eval(-h), 2.0 * h);
    } catch (const std::domain_error&) {
    }
    try {
      return diff(eval(h), base, h);
    } catch (const std::domain_error&) {
    }
    return diff(base, eval(-h), h);
  };
  if (s_se > 0.0 || a_se > 0.0) {
    const auto [dps, dls] = derivative(true);
    const auto [dpa, dla] = derivative(false);
    out.pure_db_se = std::hypot(dps * s_se, dpa * a_se);
    out.loss_se = std::hypot(dls * s_se, dla * a_se);
  }
  return out;
}

}  // namespace tmsqz::dsp

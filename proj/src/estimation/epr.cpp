#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tmsqz/state_estimation.hpp"
#include "tmsqz/stats.hpp"

namespace tmsqz::estimation {

namespace {

struct Raw {
  std::vector<double> x1, x2, p1, p2, v1, v2;  // unscaled quadratures
};

double var_of(std::span<const double> v) { return core::sample_variance(v); }

// Var(s1 x1 - s2 x2) + Var(s1 p1 + s2 p2) over [b, e).
struct DuanParts {
  double value, var_x_minus, var_p_plus;
};

DuanParts duan_on(const Raw& q, double s1, double s2, std::size_t b, std::size_t e) {
  std::vector<double> dx(e - b), sp(e - b);
  for (std::size_t i = b; i < e; ++i) {
    dx[i - b] = s1 * q.x1[i] - s2 * q.x2[i];
    sp[i - b] = s1 * q.p1[i] + s2 * q.p2[i];
  }
  const double a = var_of(dx), c = var_of(sp);
  return {a + c, a, c};
}

}  // namespace

EprReport run_epr_analysis(const dsp::FrameSet& x_frames, const dsp::FrameSet& p_frames,
                           const dsp::FrameSet& vacuum_ref, const EprOptions& opts) {
  if (!(opts.scan_step > 0.0) || !(opts.scan_half_width >= 0.0)) {
    throw std::invalid_argument("run_epr_analysis: invalid t_c scan grid");
  }
  if (opts.n_splits < 2) throw std::invalid_argument("run_epr_analysis: n_splits must be >= 2");
  const std::size_t n = std::min(x_frames.n_frames(), p_frames.n_frames());
  if (n < 100) throw std::invalid_argument("run_epr_analysis: need at least 100 frames per quadrature");
  const auto k = static_cast<std::size_t>(opts.n_splits);
  if (vacuum_ref.n_frames() < 2 * k) throw std::invalid_argument("run_epr_analysis: vacuum reference too short");
  const auto sig_ranges = stats::split_ranges(n, k);
  const auto ref_ranges = stats::split_ranges(vacuum_ref.n_frames(), k);

  EprReport report;
  report.duan = std::numeric_limits<double>::infinity();
  const auto n_steps = static_cast<long>(std::floor(opts.scan_half_width / opts.scan_step + 1e-9));
  for (long step = -n_steps; step <= n_steps; ++step) {
    const double tc = opts.tc_nominal + static_cast<double>(step) * opts.scan_step;
    dsp::ModeParams mp;
    mp.gamma = opts.gamma;
    mp.period = opts.period;
    mp.t_w = opts.t_w;
    mp.t_c = tc;
    mp.dt = x_frames.dt;
    mp.family = dsp::ModeFamily::g1;
    const auto g1 = dsp::make_mode(mp);
    mp.family = dsp::ModeFamily::g2;
    const auto g2 = dsp::make_mode(mp);
    if (step == -n_steps) report.warnings = g1.warnings;

    Raw q{dsp::extract_quadratures(x_frames, g1), dsp::extract_quadratures(x_frames, g2),
          dsp::extract_quadratures(p_frames, g1), dsp::extract_quadratures(p_frames, g2),
          dsp::extract_quadratures(vacuum_ref, g1), dsp::extract_quadratures(vacuum_ref, g2)};
    const double s1 = 1.0 / std::sqrt(var_of(q.v1));
    const double s2 = 1.0 / std::sqrt(var_of(q.v2));
    const auto full = duan_on(q, s1, s2, 0, n);
    report.scan.emplace_back(tc, full.value);
    if (full.value < report.duan) {
      // Each set is normalized on its own share of the vacuum reference so the
      // error includes the reference uncertainty.
      std::vector<double> per_set;
      for (std::size_t s = 0; s < k; ++s) {
        const auto [rb, re] = ref_ranges[s];
        const double a1 = 1.0 / std::sqrt(var_of(std::span(q.v1).subspan(rb, re - rb)));
        const double a2 = 1.0 / std::sqrt(var_of(std::span(q.v2).subspan(rb, re - rb)));
        per_set.push_back(duan_on(q, a1, a2, sig_ranges[s].first, sig_ranges[s].second).value);
      }
      report.duan = full.value;
      report.std_error = stats::split_stderr(per_set);
      report.entangled = full.value < 4.0;
      report.t_c = tc;
      report.var_x_minus = full.var_x_minus;
      report.var_p_plus = full.var_p_plus;
    }
  }
  report.effective_db = core::effective_squeezing_db(report.duan);
  return report;
}

}  // namespace tmsqz::estimation

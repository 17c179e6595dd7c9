#pragma once

// Parametric-gain law r = gain_coeff * sqrt(P) and the squeezer trajectory
// driven by a pump trace. The single-pass OPA responds instantaneously, so
// the map is pointwise in time.

#include <utility>
#include <vector>

#include "tmsqz/pump_program.hpp"

namespace tmsqz::opa {

struct GainFit {
  double gain_coeff = 0.0;    // mW^-1/2
  double fit_residual = 0.0;  // RMS of r residuals
};

/// Least-squares fit of r = k sqrt(P) to r_i = ln(G_i) / 2, where G is the
/// maximum phase-sensitive power gain e^{2r}. Needs >= 3 distinct positive
/// powers and positive gains; a fit with k <= 0 (no squeezing) is rejected.
GainFit fit_gain_curve(const std::vector<std::pair<double, double>>& pump_mw_and_gain);

struct LossBudget {
  double opa_internal = 0.09;
  double propagation = 0.02;
  double mode_matching = 0.03;
  double photodiode = 0.01;

  /// 1 - prod(1 - l_i).
  double total() const;
};

void validate(const LossBudget& b);

/// Loss used by default simulations: the value inferred from the measured
/// squeezing / anti-squeezing pair, which the component budget only
/// approximately reproduces.
inline constexpr double kFittedLoss = 0.183;

struct SqueezerTrajectory {
  double dt = 1e-9;
  double t0 = 0.0;
  std::vector<double> r;
  std::vector<double> theta;
  double loss = kFittedLoss;

  std::size_t size() const { return r.size(); }
  double time_at(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

/// r(t) = gain_coeff sqrt(P(t)); theta(t) = pump_phase(t) / 2.
/// Throws std::invalid_argument on negative power or misaligned traces.
SqueezerTrajectory trajectory_from_pump(const std::vector<double>& power_mw,
                                        const std::vector<double>& phase_rad, double dt, double t0,
                                        const GainFit& fit, double loss);

SqueezerTrajectory trajectory_from_pump(const pump::PowerTrace& trace, const GainFit& fit, double loss);

/// Constant squeezing for `n` samples.
SqueezerTrajectory constant_trajectory(double r, double theta, double loss, std::size_t n,
                                       double dt = 1e-9, double t0 = 0.0);

}  // namespace tmsqz::opa

#include "tmsqz/opa_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tmsqz::opa {

GainFit fit_gain_curve(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_gain_curve: need at least 3 points");
  std::vector<double> powers;
  for (const auto& [p, g] : points) {
    if (!(p > 0.0)) throw std::invalid_argument("fit_gain_curve: pump powers must be positive");
    if (!(g > 0.0)) throw std::invalid_argument("fit_gain_curve: gains must be positive");
    powers.push_back(p);
  }
  std::sort(powers.begin(), powers.end());
  if (std::adjacent_find(powers.begin(), powers.end()) != powers.end()) {
    throw std::invalid_argument("fit_gain_curve: pump powers must be distinct");
  }

  // Minimize sum (r_i - k sqrt(P_i))^2  =>  k = sum r_i sqrt(P_i) / sum P_i.
  double num = 0.0;
  double den = 0.0;
  for (const auto& [p, g] : points) {
    const double r = 0.5 * std::log(g);
    num += r * std::sqrt(p);
    den += p;
  }
  GainFit fit;
  fit.gain_coeff = num / den;
  if (!(fit.gain_coeff > 1e-12)) {
    throw std::invalid_argument("fit_gain_curve: no parametric gain in the data (degenerate fit)");
  }
  double ss = 0.0;
  for (const auto& [p, g] : points) {
    const double res = 0.5 * std::log(g) - fit.gain_coeff * std::sqrt(p);
    ss += res * res;
  }
  fit.fit_residual = std::sqrt(ss / static_cast<double>(points.size()));
  return fit;
}

double LossBudget::total() const {
  return 1.0 - (1.0 - opa_internal) * (1.0 - propagation) * (1.0 - mode_matching) * (1.0 - photodiode);
}

void validate(const LossBudget& b) {
  for (double l : {b.opa_internal, b.propagation, b.mode_matching, b.photodiode}) {
    if (!(l >= 0.0 && l < 1.0)) throw std::invalid_argument("loss budget entries must be in [0, 1)");
  }
}

SqueezerTrajectory trajectory_from_pump(const std::vector<double>& power_mw,
                                        const std::vector<double>& phase_rad, double dt, double t0,
                                        const GainFit& fit, double loss) {
  if (power_mw.size() != phase_rad.size()) {
    throw std::invalid_argument("trajectory_from_pump: power and phase traces differ in length");
  }
  if (!(fit.gain_coeff > 0.0)) throw std::invalid_argument("trajectory_from_pump: gain_coeff must be > 0");
  if (!(loss >= 0.0 && loss < 1.0)) throw std::invalid_argument("trajectory_from_pump: loss must be in [0, 1)");
  SqueezerTrajectory traj;
  traj.dt = dt;
  traj.t0 = t0;
  traj.loss = loss;
  traj.r.resize(power_mw.size());
  traj.theta.resize(power_mw.size());
  for (std::size_t i = 0; i < power_mw.size(); ++i) {
    if (!(power_mw[i] >= 0.0)) {
      throw std::invalid_argument("trajectory_from_pump: negative pump power (clamp upstream)");
    }
    traj.r[i] = fit.gain_coeff * std::sqrt(power_mw[i]);
    // theta in [0, pi): pump phase 2 theta in [0, 2 pi).
    traj.theta[i] = std::fmod(0.5 * phase_rad[i], std::numbers::pi);
    if (traj.theta[i] < 0.0) traj.theta[i] += std::numbers::pi;
  }
  return traj;
}

SqueezerTrajectory trajectory_from_pump(const pump::PowerTrace& trace, const GainFit& fit, double loss) {
  return trajectory_from_pump(trace.power_mw, trace.phase_rad, trace.dt, trace.t0, fit, loss);
}

SqueezerTrajectory constant_trajectory(double r, double theta, double loss, std::size_t n, double dt,
                                       double t0) {
  SqueezerTrajectory traj;
  traj.dt = dt;
  traj.t0 = t0;
  traj.loss = loss;
  traj.r.assign(n, r);
  traj.theta.assign(n, theta);
  return traj;
}

}  // namespace tmsqz::opa

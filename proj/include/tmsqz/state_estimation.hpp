#pragma once

// Gaussian tomography from multi-phase homodyne samples, covariance ellipses,
// and the two-mode entanglement analysis built on the mode extractor.

#include <string>
#include <utility>
#include <vector>

#include "tmsqz/dsp_analysis.hpp"
#include "tmsqz/quantum_core.hpp"

namespace tmsqz::estimation {

struct PhaseGroup {
  double phase = 0.0;  // LO phase, radians
  std::vector<double> samples;
};

struct TomographyInput {
  std::vector<PhaseGroup> groups;
};

struct TomographyOptions {
  /// Restrict the fit to det(cov) >= 1. When the free optimum is unphysical
  /// the fit is redone on the det = 1 boundary (pure states).
  bool enforce_physical = false;
  int n_splits = 10;
};

/// 1/sqrt(e) contour of the Wigner function: the locus d^T C^-1 d = 1.
struct Ellipse {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double semi_major = 1.0;
  double semi_minor = 1.0;
  /// Orientation of the squeezed (minor) axis from the x axis, degrees in
  /// (-90, 90]. 0 for a circle.
  double angle_deg = 0.0;
};

Ellipse wigner_ellipse(const core::GaussianState& state);

struct TomographyStdErrors {
  double mean_x = 0.0, mean_p = 0.0;
  double delta_x = 0.0, delta_p = 0.0;  // sqrt(C_xx), sqrt(C_pp)
  double cov_xx = 0.0, cov_pp = 0.0, cov_xp = 0.0;
  double semi_major = 0.0, semi_minor = 0.0;
  double angle_deg = 0.0;
};

struct TomographyResult {
  core::GaussianState state;
  Ellipse ellipse;
  TomographyStdErrors std_error;
  /// Unconstrained ML estimate (equals `state` unless the constraint was active).
  core::GaussianState unconstrained;
  TomographyStdErrors unconstrained_std_error;
  bool constrained = false;
  bool positive_definite = true;
  bool physical = true;
  std::size_t n_samples = 0;
  std::vector<double> phases;
  std::vector<std::string> warnings;
};

/// Maximum-likelihood fit of m(phi) = <x> cos phi + <p> sin phi and
/// V(phi) = C_xx cos^2 + C_pp sin^2 + 2 C_xp sin cos. Starts from weighted
/// moment matching, then Newton iterations on the exact log-likelihood.
/// Throws std::invalid_argument for fewer than 3 distinct phases or groups
/// under 100 samples, IllConditionedError when the phases span < 90 degrees.
TomographyResult ml_gaussian_tomography(const TomographyInput& input, const TomographyOptions& opts = {});

struct EprOptions {
  double gamma = 5e6;
  double period = 100e-9;
  double t_w = 1000e-9;
  double tc_nominal = 0.0;
  double scan_half_width = 25e-9;
  double scan_step = 1e-9;
  int n_splits = 10;
};

struct EprReport {
  double duan = 0.0;
  double std_error = 0.0;
  double effective_db = 0.0;
  double t_c = 0.0;
  bool entangled = false;
  double var_x_minus = 0.0;  // Var(x1 - x2)
  double var_p_plus = 0.0;   // Var(p1 + p2)
  std::vector<std::pair<double, double>> scan;  // (t_c, duan)
  std::vector<std::string> warnings;
};

/// x and p frames are taken at LO phases 0 and pi/2. For each t_c on the scan
/// grid the g1 / g2 quadratures are extracted (each mode scaled on the vacuum
/// reference) and the Duan value computed; the minimum is reported.
EprReport run_epr_analysis(const dsp::FrameSet& x_frames, const dsp::FrameSet& p_frames,
                           const dsp::FrameSet& vacuum_ref, const EprOptions& opts);

}  // namespace tmsqz::estimation

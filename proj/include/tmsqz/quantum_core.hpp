#pragma once

// Conventions and Gaussian-state algebra shared by every module.
//
// Quadratures use hbar = 2: the vacuum has unit variance in every quadrature,
// and every physical single-mode covariance satisfies det(C) >= 1. Variances
// are kept in linear shot-noise units; decibels appear only at presentation
// boundaries.

#include <Eigen/Dense>
#include <span>

namespace tmsqz::core {

inline constexpr double kHbar = 2.0;
inline constexpr double kVacuumVariance = 1.0;
inline constexpr double kPhysicalTolerance = 1e-9;

struct GaussianState {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();

  static GaussianState vacuum() { return {}; }
};

struct TwoModeGaussianState {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();  // (x1, p1, x2, p2)
  Eigen::Matrix4d cov = Eigen::Matrix4d::Identity();
};

/// Squeezing parameter r >= 0, squeezing phase theta (the quadrature angle
/// with minimum variance) in [0, pi), loss fraction in [0, 1).
struct SqueezeParams {
  double r = 0.0;
  double theta = 0.0;
  double loss = 0.0;
};

void validate(const SqueezeParams& p);

/// Homodyne variance at LO phase phi:
/// (1 - L)[e^{-2r} cos^2(phi - theta) + e^{2r} sin^2(phi - theta)] + L.
double variance_at_phase(const SqueezeParams& p, double phi);

/// Signed level 10 log10(v): negative below shot noise. Throws std::domain_error for v <= 0.
double db_from_variance(double v);

/// Positive "squeezing level" -10 log10(v) for a squeezed variance.
double squeezing_level_db(double v);

double variance_from_db(double db);

/// r such that the pure (lossless) squeezed variance is db below shot noise:
/// r = ln(10^(db/10)) / 2. Throws std::domain_error for db < 0.
double r_from_pure_db(double db);

/// Inverse of r_from_pure_db: 10 log10(e^{2r}).
double pure_db_from_r(double r);

/// Pure squeezed state with loss applied, zero mean.
GaussianState squeezed_state(const SqueezeParams& p);

/// Pure-loss channel: cov -> (1 - L) cov + L I, mean -> sqrt(1 - L) mean.
GaussianState apply_loss(const GaussianState& s, double loss);

/// Symmetric, positive definite, det(cov) >= 1 - tol.
bool is_physical(const GaussianState& s, double tol = kPhysicalTolerance);

/// Symmetric, positive definite, cov + i Omega >= 0 - tol.
bool is_physical(const TwoModeGaussianState& s, double tol = kPhysicalTolerance);

/// Rescales an unphysical covariance onto the det = 1 boundary. Identity for
/// physical states. Only applied on explicit request; estimators never call it
/// implicitly.
GaussianState project_to_physical(const GaussianState& s);

struct DuanResult {
  double value = 0.0;
  double std_error = 0.0;
  bool entangled = false;
};

/// Var(x1 - x2) + Var(p1 + p2) from per-frame quadrature samples. The standard
/// error comes from splitting the samples into `n_splits` contiguous sets.
DuanResult duan_value(std::span<const double> x1, std::span<const double> p1,
                      std::span<const double> x2, std::span<const double> p2, int n_splits = 10);

/// C11 + C33 - 2 C13 + C22 + C44 + 2 C24 (one-based indices over x1 p1 x2 p2).
double duan_from_covariance(const TwoModeGaussianState& s);

/// 10 log10(4 / duan).
double effective_squeezing_db(double duan);

/// Unbiased sample variance.
double sample_variance(std::span<const double> x);

}  // namespace tmsqz::core

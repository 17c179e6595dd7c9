#include "tmsqz/quantum_core.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "tmsqz/stats.hpp"

namespace tmsqz::core {

void validate(const SqueezeParams& p) {
  if (!(p.r >= 0.0) || !std::isfinite(p.r)) throw std::domain_error("squeeze: r must be >= 0");
  if (!(p.loss >= 0.0 && p.loss < 1.0)) throw std::domain_error("squeeze: loss must be in [0, 1)");
  if (!(p.theta >= 0.0 && p.theta < std::numbers::pi)) throw std::domain_error("squeeze: theta must be in [0, pi)");
}

double variance_at_phase(const SqueezeParams& p, double phi) {
  const double c = std::cos(phi - p.theta);
  const double s = std::sin(phi - p.theta);
  return (1.0 - p.loss) * (std::exp(-2.0 * p.r) * c * c + std::exp(2.0 * p.r) * s * s) + p.loss;
}

double db_from_variance(double v) {
  if (!(v > 0.0)) throw std::domain_error("db_from_variance: variance must be positive");
  return 10.0 * std::log10(v);
}

double squeezing_level_db(double v) { return -db_from_variance(v); }

double variance_from_db(double db) { return std::pow(10.0, db / 10.0); }

double r_from_pure_db(double db) {
  if (!(db >= 0.0)) throw std::domain_error("r_from_pure_db: level must be >= 0 dB");
  return 0.5 * std::log(std::pow(10.0, db / 10.0));
}

double pure_db_from_r(double r) { return 10.0 * std::log10(std::exp(2.0 * r)); }

GaussianState squeezed_state(const SqueezeParams& p) {
  validate(p);
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  Eigen::Matrix2d rot;
  rot << c, -s, s, c;
  const Eigen::Matrix2d pure =
      rot * Eigen::Vector2d(std::exp(-2.0 * p.r), std::exp(2.0 * p.r)).asDiagonal() *
      rot.transpose();
  return apply_loss({Eigen::Vector2d::Zero(), pure}, p.loss);
}

GaussianState apply_loss(const GaussianState& s, double loss) {
  if (!(loss >= 0.0 && loss < 1.0)) throw std::domain_error("apply_loss: loss must be in [0, 1)");
  GaussianState out;
  out.mean = std::sqrt(1.0 - loss) * s.mean;
  out.cov = (1.0 - loss) * s.cov + loss * Eigen::Matrix2d::Identity();
  return out;
}

bool is_physical(const GaussianState& s, double tol) {
  const Eigen::Matrix2d& c = s.cov;
  if (!c.allFinite() || std::abs(c(0, 1) - c(1, 0)) > tol * (1.0 + std::abs(c(0, 1)))) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(c);
  if (es.eigenvalues().minCoeff() <= tol) return false;
  return c.determinant() >= 1.0 - tol;
}

bool is_physical(const TwoModeGaussianState& s, double tol) {
  const Eigen::Matrix4d& c = s.cov;
  if (!c.allFinite() || (c - c.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(c);
  if (es.eigenvalues().minCoeff() <= tol) return false;
  // Uncertainty principle in the hbar = 2 convention: C + i Omega >= 0.
  Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
  omega(0, 1) = 1.0;
  omega(1, 0) = -1.0;
  omega(2, 3) = 1.0;
  omega(3, 2) = -1.0;
  const Eigen::Matrix4cd h = c.cast<std::complex<double>>() +
                             std::complex<double>(0.0, 1.0) * omega.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> hs(h);
  return hs.eigenvalues().minCoeff() >= -tol;
}

GaussianState project_to_physical(const GaussianState& s) {
  GaussianState out = s;
  out.cov = 0.5 * (s.cov + s.cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(out.cov);
  Eigen::Vector2d ev = es.eigenvalues().cwiseMax(1e-12);
  const double det = ev.prod();
  if (det < 1.0) ev /= std::sqrt(det);
  out.cov = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return out;
}

double sample_variance(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("sample_variance: need at least two samples");
  const double m = stats::mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(n - 1);
}

namespace {

double duan_of(std::span<const double> x1, std::span<const double> p1, std::span<const double> x2,
               std::span<const double> p2) {
  const std::size_t n = x1.size();
  std::vector<double> dx(n), sp(n);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = x1[i] - x2[i];
    sp[i] = p1[i] + p2[i];
  }
  return sample_variance(dx) + sample_variance(sp);
}

}  // namespace

DuanResult duan_value(std::span<const double> x1, std::span<const double> p1,
                      std::span<const double> x2, std::span<const double> p2, int n_splits) {
  const std::size_t n = x1.size();
  if (p1.size() != n || x2.size() != n || p2.size() != n) {
    throw std::invalid_argument("duan_value: sample arrays differ in length");
  }
  if (n < 100) throw std::invalid_argument("duan_value: need at least 100 samples");
  if (n_splits < 2 || static_cast<std::size_t>(n_splits) * 2 > n) {
    throw std::invalid_argument("duan_value: bad split count");
  }

  DuanResult out;
  out.value = duan_of(x1, p1, x2, p2);
  std::vector<double> parts;
  for (auto [b, e] : stats::split_ranges(n, static_cast<std::size_t>(n_splits))) {
    const std::size_t len = e - b;
    parts.push_back(duan_of(x1.subspan(b, len), p1.subspan(b, len), x2.subspan(b, len),
                            p2.subspan(b, len)));
  }
  out.std_error = stats::split_stderr(parts);
  out.entangled = out.value < 2.0 * kHbar;
  return out;
}

double duan_from_covariance(const TwoModeGaussianState& s) {
  const Eigen::Matrix4d& c = s.cov;
  return c(0, 0) + c(2, 2) - 2.0 * c(0, 2) + c(1, 1) + c(3, 3) + 2.0 * c(1, 3);
}

double effective_squeezing_db(double duan) {
  if (!(duan > 0.0)) throw std::domain_error("effective_squeezing_db: value must be positive");
  return 10.0 * std::log10(4.0 / duan);
}

}  // namespace tmsqz::core

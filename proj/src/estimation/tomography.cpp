#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "tmsqz/errors.hpp"
#include "tmsqz/state_estimation.hpp"
#include "tmsqz/stats.hpp"

namespace tmsqz::estimation {

namespace {

constexpr double kPi = std::numbers::pi;

struct GroupStats {
  double c, s;   // cos, sin of the LO phase
  double n;      // sample count
  double mu;     // sample mean
  double ss;     // sum of squared deviations from mu
};

std::vector<GroupStats> summarize(const std::vector<PhaseGroup>& groups, std::size_t split = 0,
                                  std::size_t n_splits = 1) {
  std::vector<GroupStats> out;
  for (const auto& g : groups) {
    std::span<const double> x = g.samples;
    if (n_splits > 1) {
      const auto r = stats::split_ranges(x.size(), n_splits)[split];
      x = x.subspan(r.first, r.second - r.first);
    }
    const double mu = stats::mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mu) * (v - mu);
    out.push_back({std::cos(g.phase), std::sin(g.phase), static_cast<double>(x.size()), mu, ss});
  }
  return out;
}

struct Eval {
  double ll = -std::numeric_limits<double>::infinity();
  Eigen::Matrix<double, 5, 1> grad = Eigen::Matrix<double, 5, 1>::Zero();
  Eigen::Matrix<double, 5, 5> hess = Eigen::Matrix<double, 5, 5>::Zero();
};

// Log-likelihood in p = (<x>, <p>, C_xx, C_pp, C_xp) up to a constant:
// -1/2 sum [n ln V + (SS + n (mu - m)^2) / V].
Eval evaluate(const std::vector<GroupStats>& gs, const Eigen::Matrix<double, 5, 1>& p) {
  Eval e;
  double ll = 0.0;
  for (const auto& g : gs) {
    const Eigen::Vector2d b(g.c, g.s);
    const Eigen::Vector3d a(g.c * g.c, g.s * g.s, 2.0 * g.s * g.c);
    const double v = a.dot(p.tail<3>());
    if (!(v > 0.0)) return Eval{};
    const double d = g.mu - b.dot(p.head<2>());
    const double q = g.ss + g.n * d * d;
    ll += -0.5 * (g.n * std::log(v) + q / v);
    e.grad.head<2>() += g.n * d / v * b;
    e.grad.tail<3>() += -0.5 * (g.n / v - q / (v * v)) * a;
    e.hess.topLeftCorner<2, 2>() += -g.n / v * b * b.transpose();
    e.hess.bottomRightCorner<3, 3>() += -0.5 * (-g.n / (v * v) + 2.0 * q / (v * v * v)) * a * a.transpose();
    const Eigen::Matrix<double, 2, 3> cross = -g.n * d / (v * v) * b * a.transpose();
    e.hess.topRightCorner<2, 3>() += cross;
    e.hess.bottomLeftCorner<3, 2>() += cross.transpose();
  }
  e.ll = ll;
  return e;
}

// Damped Newton ascent. `f` returns (ll, grad, hess); ll = -inf marks an
// infeasible point.
template <int N, typename F>
Eigen::Matrix<double, N, 1> maximize(Eigen::Matrix<double, N, 1> x, F f) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  auto cur = f(x);
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    const Mat a = -std::get<2>(cur);
    const Vec g = std::get<1>(cur);
    bool accepted = false;
    for (int tries = 0; tries < 40; ++tries) {
      Mat damped = a;
      for (int i = 0; i < N; ++i) damped(i, i) += lambda * (std::abs(a(i, i)) + 1e-12);
      const Vec step = damped.fullPivLu().solve(g);
      const auto next = f(x + step);
      if (std::get<0>(next) >= std::get<0>(cur) && std::isfinite(std::get<0>(next))) {
        x += step;
        const double gain = std::get<0>(next) - std::get<0>(cur);
        cur = next;
        lambda = lambda * 0.1 < 1e-9 ? 0.0 : lambda * 0.1;
        accepted = true;
        if (gain < 1e-13 * (1.0 + std::abs(std::get<0>(cur)))) return x;
        break;
      }
      lambda = lambda == 0.0 ? 1e-4 : lambda * 10.0;
    }
    if (!accepted) return x;
  }
  return x;
}

Eigen::Matrix<double, 5, 1> moment_start(const std::vector<GroupStats>& gs) {
  Eigen::Matrix2d bb = Eigen::Matrix2d::Zero();
  Eigen::Vector2d by = Eigen::Vector2d::Zero();
  for (const auto& g : gs) {
    const Eigen::Vector2d b(g.c, g.s);
    bb += g.n * b * b.transpose();
    by += g.n * g.mu * b;
  }
  const Eigen::Vector2d mean = bb.ldlt().solve(by);
  Eigen::Matrix3d aa = Eigen::Matrix3d::Zero();
  Eigen::Vector3d av = Eigen::Vector3d::Zero();
  double vbar = 0.0;
  double ntot = 0.0;
  for (const auto& g : gs) {
    const Eigen::Vector3d a(g.c * g.c, g.s * g.s, 2.0 * g.s * g.c);
    const double d = g.mu - Eigen::Vector2d(g.c, g.s).dot(mean);
    const double v = (g.ss + g.n * d * d) / g.n;
    aa += g.n * a * a.transpose();
    av += g.n * v * a;
    vbar += g.n * v;
    ntot += g.n;
  }
  Eigen::Vector3d c = aa.fullPivLu().solve(av);
  if (!(c(0) > 0.0 && c(1) > 0.0 && c(0) * c(1) - c(2) * c(2) > 0.0)) c = {vbar / ntot, vbar / ntot, 0.0};
  Eigen::Matrix<double, 5, 1> p;
  p << mean, c;
  return p;
}

core::GaussianState to_state(const Eigen::Matrix<double, 5, 1>& p) {
  core::GaussianState s;
  s.mean = p.head<2>();
  s.cov << p(2), p(4), p(4), p(3);
  return s;
}

// C(r, theta) for a pure state: (cosh2r - sinh2r cos2t, cosh2r + sinh2r cos2t, -sinh2r sin2t).
core::GaussianState fit_pure(const std::vector<GroupStats>& gs, const core::GaussianState& start) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(start.cov);
  const double lmin = std::max(eig.eigenvalues()(0), 1e-12);
  const double lmax = std::max(eig.eigenvalues()(1), lmin);
  Eigen::Vector4d q;
  q << start.mean, std::max(0.25 * std::log(lmax / lmin), 1e-3),
      std::atan2(eig.eigenvectors()(1, 0), eig.eigenvectors()(0, 0));

  auto f = [&](const Eigen::Vector4d& x) {
    const double ch = std::cosh(2.0 * x(2)), sh = std::sinh(2.0 * x(2));
    const double c2 = std::cos(2.0 * x(3)), s2 = std::sin(2.0 * x(3));
    Eigen::Matrix<double, 5, 1> p;
    p << x(0), x(1), ch - sh * c2, ch + sh * c2, -sh * s2;
    const Eval e = evaluate(gs, p);
    Eigen::Matrix<double, 3, 2> j;
    j << 2 * sh - 2 * ch * c2, 2 * sh * s2,
         2 * sh + 2 * ch * c2, -2 * sh * s2,
         -2 * ch * s2, -2 * sh * c2;
    // Second derivatives of each C component: (rr, tt, rt).
    const Eigen::Matrix3d d2{{4 * ch - 4 * sh * c2, 4 * sh * c2, 4 * ch * s2},
                             {4 * ch + 4 * sh * c2, -4 * sh * c2, -4 * ch * s2},
                             {-4 * sh * s2, 4 * sh * s2, -4 * ch * c2}};
    Eigen::Vector4d g;
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    const Eigen::Vector3d gc = e.grad.tail<3>();
    g << e.grad.head<2>(), j.transpose() * gc;
    h.topLeftCorner<2, 2>() = e.hess.topLeftCorner<2, 2>();
    h.topRightCorner<2, 2>() = e.hess.topRightCorner<2, 3>() * j;
    h.bottomLeftCorner<2, 2>() = h.topRightCorner<2, 2>().transpose();
    Eigen::Matrix2d hrr = j.transpose() * e.hess.bottomRightCorner<3, 3>() * j;
    hrr(0, 0) += gc.dot(d2.col(0));
    hrr(1, 1) += gc.dot(d2.col(1));
    hrr(0, 1) += gc.dot(d2.col(2));
    hrr(1, 0) += gc.dot(d2.col(2));
    h.bottomRightCorner<2, 2>() = hrr;
    return std::tuple{e.ll, g, h};
  };
  const Eigen::Vector4d x = maximize<4>(q, f);
  const double ch = std::cosh(2.0 * x(2)), sh = std::sinh(2.0 * x(2));
  core::GaussianState s;
  s.mean = x.head<2>();
  s.cov << ch - sh * std::cos(2.0 * x(3)), -sh * std::sin(2.0 * x(3)), -sh * std::sin(2.0 * x(3)),
      ch + sh * std::cos(2.0 * x(3));
  return s;
}

struct Fit {
  core::GaussianState state;
  core::GaussianState unconstrained;
  bool constrained = false;
};

Fit fit(const std::vector<GroupStats>& gs, bool enforce_physical) {
  auto f = [&](const Eigen::Matrix<double, 5, 1>& p) {
    const Eval e = evaluate(gs, p);
    return std::tuple{e.ll, e.grad, e.hess};
  };
  Fit out;
  out.unconstrained = to_state(maximize<5>(moment_start(gs), f));
  out.state = out.unconstrained;
  if (enforce_physical && out.unconstrained.cov.determinant() < 1.0) {
    out.state = fit_pure(gs, core::project_to_physical(out.unconstrained));
    out.constrained = true;
  }
  return out;
}

double wrap_angle_deg(double a) {
  while (a > 90.0) a -= 180.0;
  while (a <= -90.0) a += 180.0;
  return a;
}

void check_input(const TomographyInput& input) {
  std::vector<double> distinct;
  for (const auto& g : input.groups) {
    if (g.samples.size() < 100) throw std::invalid_argument("tomography: each phase group needs >= 100 samples");
    if (!std::isfinite(g.phase)) throw std::invalid_argument("tomography: non-finite phase");
    double m = std::fmod(g.phase, 2.0 * kPi);
    if (m < 0.0) m += 2.0 * kPi;
    if (std::none_of(distinct.begin(), distinct.end(), [&](double d) { return std::abs(d - m) < 1e-9; })) {
      distinct.push_back(m);
    }
  }
  if (distinct.size() < 3) throw std::invalid_argument("tomography: need at least 3 distinct phases");
  // Quadrature angles matter modulo pi; the span is pi minus the largest gap.
  std::vector<double> mod_pi;
  for (double d : distinct) mod_pi.push_back(std::fmod(d, kPi));
  std::sort(mod_pi.begin(), mod_pi.end());
  double gap = mod_pi.front() + kPi - mod_pi.back();
  for (std::size_t i = 1; i < mod_pi.size(); ++i) gap = std::max(gap, mod_pi[i] - mod_pi[i - 1]);
  if (kPi - gap < 0.5 * kPi - 1e-9) {
    throw IllConditionedError("tomography: LO phases span less than 90 degrees");
  }
}

}  // namespace

Ellipse wigner_ellipse(const core::GaussianState& state) {
  const Eigen::Matrix2d& c = state.cov;
  if (!(std::abs(c(0, 1) - c(1, 0)) <= 1e-12 * (1.0 + c.norm()))) {
    throw std::domain_error("wigner_ellipse: covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(c);
  const auto& ev = eig.eigenvalues();
  if (!(ev(0) > 0.0)) throw std::domain_error("wigner_ellipse: covariance not positive definite");
  Ellipse e;
  e.center = state.mean;
  e.semi_minor = std::sqrt(ev(0));
  e.semi_major = std::sqrt(ev(1));
  if (ev(1) - ev(0) <= 1e-12 * ev(1)) {
    e.angle_deg = 0.0;
  } else {
    const Eigen::Vector2d v = eig.eigenvectors().col(0);
    e.angle_deg = wrap_angle_deg(std::atan2(v(1), v(0)) * 180.0 / kPi);
  }
  return e;
}

TomographyResult ml_gaussian_tomography(const TomographyInput& input, const TomographyOptions& opts) {
  check_input(input);
  if (opts.n_splits < 1) throw std::invalid_argument("tomography: n_splits must be >= 1");

  const Fit full = fit(summarize(input.groups), opts.enforce_physical);
  TomographyResult res;
  res.state = full.state;
  res.unconstrained = full.unconstrained;
  res.constrained = full.constrained;
  const Eigen::Matrix2d& c = res.state.cov;
  res.positive_definite = c(0, 0) > 0.0 && c.determinant() > 0.0;
  res.physical = core::is_physical(res.state);
  for (const auto& g : input.groups) {
    res.n_samples += g.samples.size();
    res.phases.push_back(g.phase);
  }
  if (!res.positive_definite) {
    res.warnings.push_back("covariance estimate is not positive definite");
    return res;
  }
  res.ellipse = wigner_ellipse(res.state);
  if (!res.physical) res.warnings.push_back("det(cov) < 1: estimate violates the uncertainty bound");

  const auto k = static_cast<std::size_t>(opts.n_splits);
  std::size_t min_group = std::numeric_limits<std::size_t>::max();
  for (const auto& g : input.groups) min_group = std::min(min_group, g.samples.size());
  if (k < 2 || min_group < 2 * k) return res;

  // Split values of one estimate; angles unwrapped around the full-data angle.
  auto split_fields = [](const core::GaussianState& st, double ref_angle, std::vector<std::vector<double>>& fields) {
    const double det = st.cov.determinant();
    const Ellipse el = (st.cov(0, 0) > 0.0 && det > 0.0) ? wigner_ellipse(st) : Ellipse{};
    const double da = wrap_angle_deg(el.angle_deg - ref_angle);
    const double vals[10] = {st.mean(0), st.mean(1), std::sqrt(std::max(st.cov(0, 0), 0.0)),
                             std::sqrt(std::max(st.cov(1, 1), 0.0)), st.cov(0, 0), st.cov(1, 1),
                             st.cov(0, 1), el.semi_major, el.semi_minor, ref_angle + da};
    for (std::size_t i = 0; i < 10; ++i) fields[i].push_back(vals[i]);
  };
  auto to_errors = [](const std::vector<std::vector<double>>& f) {
    auto se = [&](std::size_t i) { return stats::split_stderr(f[i]); };
    return TomographyStdErrors{se(0), se(1), se(2), se(3), se(4), se(5), se(6), se(7), se(8), se(9)};
  };
  const Eigen::Matrix2d& cu = res.unconstrained.cov;
  const double free_angle = (cu(0, 0) > 0.0 && cu.determinant() > 0.0) ? wigner_ellipse(res.unconstrained).angle_deg
                                                                        : res.ellipse.angle_deg;
  std::vector<std::vector<double>> fields(10), free_fields(10);
  for (std::size_t s = 0; s < k; ++s) {
    const Fit part = fit(summarize(input.groups, s, k), opts.enforce_physical);
    split_fields(part.state, res.ellipse.angle_deg, fields);
    split_fields(part.unconstrained, free_angle, free_fields);
  }
  res.std_error = to_errors(fields);
  res.unconstrained_std_error = to_errors(free_fields);
  return res;
}

}  // namespace tmsqz::estimation

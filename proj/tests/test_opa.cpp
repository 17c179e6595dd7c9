#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tmsqz/opa_model.hpp"

using namespace tmsqz::opa;

TEST_SUITE("opa") {

TEST_CASE("gain fit recovers the sqrt(P) coefficient") {
  const double k = 0.1224;
  std::vector<std::pair<double, double>> pts;
  for (double p = 0.5; p <= 6.5; p += 0.5) pts.emplace_back(p, std::exp(2.0 * k * std::sqrt(p)));
  const auto fit = fit_gain_curve(pts);
  CHECK(fit.gain_coeff == doctest::Approx(k).epsilon(1e-12));
  CHECK(fit.fit_residual < 1e-12);

  // Noisy gains: the least-squares closed form computed here independently.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.01);
  double num = 0.0, den = 0.0;
  for (auto& [p, g] : pts) {
    g = std::exp(2.0 * (k * std::sqrt(p) + noise(rng)));
    num += 0.5 * std::log(g) * std::sqrt(p);
    den += p;
  }
  const auto noisy = fit_gain_curve(pts);
  CHECK(noisy.gain_coeff == doctest::Approx(num / den).epsilon(1e-12));
  CHECK(noisy.fit_residual > 0.0);
}

TEST_CASE("gain fit rejects degenerate data") {
  CHECK_THROWS_AS(fit_gain_curve({{1.0, 1.1}, {2.0, 1.2}}), std::invalid_argument);
  CHECK_THROWS_AS(fit_gain_curve({{1.0, 1.1}, {1.0, 1.2}, {2.0, 1.3}}), std::invalid_argument);
  CHECK_THROWS_AS(fit_gain_curve({{1.0, 1.1}, {-2.0, 1.2}, {3.0, 1.3}}), std::invalid_argument);
  CHECK_THROWS_AS(fit_gain_curve({{1.0, 1.1}, {2.0, 0.0}, {3.0, 1.3}}), std::invalid_argument);
  CHECK_THROWS_AS(fit_gain_curve({{1.0, 1.0}, {2.0, 1.0}, {3.0, 1.0}}), std::invalid_argument);
}

TEST_CASE("loss budget compounds multiplicatively") {
  const LossBudget b;
  CHECK(b.total() == doctest::Approx(1.0 - 0.91 * 0.98 * 0.97 * 0.99).epsilon(1e-14));
  CHECK(b.total() > 0.14);
  CHECK(b.total() < 0.15);
  CHECK(b.total() < kFittedLoss);
  LossBudget bad;
  bad.photodiode = 1.0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("trajectory from pump") {
  const GainFit fit{oracle::r_from_db(2.71) / std::sqrt(6.5), 0.0};
  const auto t = trajectory_from_pump({0.0, 6.5, 6.5, 26.0}, {0.0, 0.0, oracle::kPi, 0.0}, 1e-9, -5e-9, fit, 0.183);
  REQUIRE(t.size() == 4);
  CHECK(t.r[0] == 0.0);
  CHECK(t.r[1] == doctest::Approx(0.3120).epsilon(1e-4));
  CHECK(t.theta[1] == 0.0);
  CHECK(t.theta[2] == doctest::Approx(oracle::kPi / 2));
  CHECK(t.r[3] == doctest::Approx(2.0 * t.r[1]).epsilon(1e-15));  // 4x power doubles r
  CHECK(t.time_at(0) == doctest::Approx(-5e-9));
  CHECK(t.loss == 0.183);
  CHECK_THROWS_AS(trajectory_from_pump({-0.1}, {0.0}, 1e-9, 0.0, fit, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(trajectory_from_pump({1.0, 1.0}, {0.0}, 1e-9, 0.0, fit, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(trajectory_from_pump({1.0}, {0.0}, 1e-9, 0.0, fit, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(trajectory_from_pump({1.0}, {0.0}, 1e-9, 0.0, GainFit{0.0, 0.0}, 0.1), std::invalid_argument);
}

TEST_CASE("trajectory is pointwise: permuting inputs permutes outputs") {
  const GainFit fit{0.12, 0.0};
  std::vector<double> p{0.1, 2.0, 6.5, 0.0, 3.3, 4.4};
  std::vector<double> ph{0.0, oracle::kPi, 0.0, oracle::kPi, oracle::kPi, 0.0};
  const auto a = trajectory_from_pump(p, ph, 1e-9, 0.0, fit, 0.2);
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  std::vector<double> pp, pph;
  for (auto i : perm) {
    pp.push_back(p[i]);
    pph.push_back(ph[i]);
  }
  const auto b = trajectory_from_pump(pp, pph, 1e-9, 0.0, fit, 0.2);
  for (std::size_t j = 0; j < perm.size(); ++j) {
    CHECK(b.r[j] == a.r[perm[j]]);
    CHECK(b.theta[j] == a.theta[perm[j]]);
    CHECK(b.r[j] >= 0.0);
    CHECK((b.theta[j] == 0.0 || b.theta[j] == doctest::Approx(oracle::kPi / 2)));
  }
}

TEST_CASE("constant trajectory") {
  const auto t = constant_trajectory(0.3, 0.5, 0.1, 10, 2e-9, 1e-9);
  CHECK(t.size() == 10);
  CHECK(t.time_at(3) == doctest::Approx(7e-9));
  CHECK(t.r[9] == 0.3);
  CHECK(t.theta[0] == 0.5);
}

}  // TEST_SUITE

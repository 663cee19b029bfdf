#include <doctest.h>

#include <cmath>
#include <random>

#include "meanfield/kuramoto_analysis.hpp"
#include "meanfield/limit_diffusions.hpp"
#include "meanfield/stat_harness.hpp"

using namespace meanfield;
using namespace meanfield::limits;

TEST_CASE("cubic coefficient closed form") {
  CHECK(kuramoto_cubic_coefficient(0.0) == 0.25);
  CHECK(kuramoto_cubic_noise(0.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(std::abs(kuramoto_cubic_coefficient(1.0 / (2.0 * std::sqrt(2.0)))) < 1e-14);
  CHECK(kuramoto_cubic_coefficient(0.25) == doctest::Approx(0.4357298474945534).epsilon(1e-14));
  CHECK(kuramoto_cubic_coefficient(0.4) == doctest::Approx(-3.4787261718934834).epsilon(1e-14));
  const auto zero = LimitSdeSpec::kuramoto_cubic_2d(0.0);
  CHECK(zero.drift_coefficient == 0.25);
  CHECK_FALSE(zero.explosive());
  CHECK(LimitSdeSpec::kuramoto_cubic_2d(0.4).explosive());
  CHECK_THROWS_AS(LimitSdeSpec::kuramoto_cubic_2d(0.5), ConfigError);
  const auto cw = LimitSdeSpec::cw_cubic_1d();
  CHECK(cw.drift_coefficient == doctest::Approx(2.0 / 3.0));
  CHECK(cw.noise == 2.0);
}

TEST_CASE("configuration guards") {
  const auto spec = LimitSdeSpec::kuramoto_cubic_2d(0.4);
  CHECK_THROWS_AS(simulate_limit(spec, 1.0, 1e-3, SeedSpec{1, 0}), ConfigError);
  CHECK_THROWS_AS(simulate_limit(LimitSdeSpec::cw_cubic_1d(), 1.0, 1e-2, SeedSpec{1, 0}), ConfigError);
  CHECK_THROWS_AS(StoppingRule::radial(0.0), ConfigError);
  const auto path = simulate_limit(spec, 5.0, 1e-3, SeedSpec{1, 0}, StoppingRule::radial(10.0), 100);
  REQUIRE(path.stopping_time.has_value());
  const auto& v = path.final_value;
  CHECK(v[0] * v[0] + v[1] * v[1] >= 10.0);
  CHECK(path.times.back() == doctest::Approx(*path.stopping_time));
}

TEST_CASE("random slope is exact") {
  const auto law = DisorderLaw::symmetric_pair(0.3);
  const double beta = 1.1;
  const auto spec = LimitSdeSpec::cw_random_slope(beta, law);
  const double v = std::pow(std::tanh(beta * 0.3), 2);
  CHECK(spec.slope_variance == doctest::Approx(v).epsilon(1e-14));
  const auto ens = simulate_limit_ensemble(spec, 2.0, 0.1, 77, 20000);
  const auto sm = stats::summarize(ens.component(0));
  CHECK(std::abs(sm.variance - 4.0 * v * 4.0) < 3.0 * sm.se_variance);
  const auto path = simulate_limit(spec, 1.0, 0.25, SeedSpec{3, 0}, {}, 1);
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    CHECK(path.values[i][0] == doctest::Approx(path.final_value[0] * path.times[i]).epsilon(1e-14));
  }
  const auto flat = simulate_limit_ensemble(LimitSdeSpec::cw_random_slope(2.0, DisorderLaw::delta(0.0)), 1.0, 0.1, 5, 50);
  for (double y : flat.component(0)) CHECK(y == 0.0);
}

TEST_CASE("driftless radius") {
  const double omega = 1.0 / (2.0 * std::sqrt(2.0));
  const auto m = radial_moments(omega, 1.0, 100000, 1e-3, 91);
  CHECK(std::abs(m.mean - 1.5) < 3.0 * m.se_mean);
}

TEST_CASE("invariant law of the ergodic cubic limit") {
  // inverse-CDF draws from the radial density ∝ ρ exp(−cρ⁴/(2σ²)) by quadrature
  const double c = 0.25, s2 = 0.5;
  const std::size_t grid = 200000;
  const double rmax = 6.0;
  std::vector<double> cdf(grid + 1, 0.0);
  const auto dens = [&](double r) { return r * std::exp(-c * r * r * r * r / (2.0 * s2)); };
  const double h = rmax / grid;
  for (std::size_t i = 0; i < grid; ++i) {
    cdf[i + 1] = cdf[i] + 0.5 * h * (dens(i * h) + dens((i + 1) * h));
  }
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, cdf.back());
  std::vector<double> oracle(40000);
  for (auto& x : oracle) {
    const double target = u(rng);
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
    x = h * static_cast<double>(std::distance(cdf.begin(), it));
  }
  const auto exact = cubic_invariant_radii(0.0, 40000, SeedSpec{14, 0});
  CHECK(stats::ks_two_sample(exact, oracle).p_value > 0.01);

  const auto ens = simulate_limit_ensemble(LimitSdeSpec::kuramoto_cubic_2d(0.0), 10.0, 1e-3, 15, 2000);
  CHECK(stats::ks_two_sample(ens.radii(), oracle).p_value > 0.01);
  CHECK_THROWS_AS(cubic_invariant_radii(0.4, 10, SeedSpec{}), ConfigError);
}

TEST_CASE("radial law does not depend on the noise stream") {
  const auto spec = LimitSdeSpec::kuramoto_cubic_2d(0.25);
  const auto a = simulate_limit_ensemble(spec, 1.0, 1e-3, 1001, 3000);
  const auto b = simulate_limit_ensemble(spec, 1.0, 1e-3, 2002, 3000);
  CHECK(stats::ks_two_sample(a.radii(), b.radii()).p_value > 0.01);
}

TEST_CASE("sign dichotomy") {
  const auto early = radial_moments(0.3, 2.0, 4000, 1e-3, 31);
  const auto late = radial_moments(0.3, 8.0, 4000, 1e-3, 32);
  CHECK(late.mean < 2.0 * early.mean);
  const auto rule = StoppingRule::radial(10.0);
  const auto spec = LimitSdeSpec::kuramoto_cubic_2d(0.4);
  const double f1 = simulate_limit_ensemble(spec, 0.5, 1e-3, 33, 4000, rule).stopped_fraction();
  const double f3 = simulate_limit_ensemble(spec, 1.5, 1e-3, 33, 4000, rule).stopped_fraction();
  CHECK(f1 < f3);
}

TEST_CASE("linear OU matches the covariance flow") {
  const auto sys = kuramoto::kuramoto_clt_system(1.25, 0.25, 2);
  const Eigen::MatrixXd a = sys.block(2);
  const Eigen::VectorXd noise = Eigen::VectorXd::Constant(4, sys.noise_amplitude(2));
  const auto spec = LimitSdeSpec::linear_ou(a, noise, kuramoto::KuramotoCltSystem::initial_covariance());
  CHECK(spec.dimension() == 4);
  const auto ens = simulate_limit_ensemble(spec, 0.5, 1e-3, 41, 20000);
  const Eigen::Matrix4d target = sys.covariance_at(2, 0.5);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto sm = stats::summarize(ens.component(i));
    CHECK(std::abs(sm.variance - target(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))) <
          3.5 * sm.se_variance);
  }
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "meanfield/kuramoto_analysis.hpp"
#include "meanfield/kuramoto_dynamics.hpp"

using namespace meanfield;
using namespace meanfield::kuramoto;
using cd = std::complex<double>;

namespace {

double angle_gap(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, kTwoPi - d);
}

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> out(n);
  for (auto& x : out) x = z(rng);
  return out;
}

const DisorderLaw kH1 = DisorderLaw::symmetric_pair(1.0);

}  // namespace

TEST_CASE("initial rotator states") {
  SUBCASE("uniform start decoheres") {
    const KuramotoParams p{1.0, 0.25, kH1, 10000};
    double mean_r = 0.0;
    for (std::uint64_t i = 0; i < 200; ++i) mean_r += order_parameter(initial_kuramoto_state(p, uniform_density(), SeedSpec{1, i})).r;
    CHECK(mean_r / 200.0 < 0.02);
  }
  SUBCASE("narrow peak is coherent") {
    const KuramotoParams p{1.0, 0.25, kH1, 2000};
    const auto peak = [](double x, double) {
      double s = 0.0;
      for (int k = -2; k <= 2; ++k) s += std::exp(-std::pow(x - k * kTwoPi, 2) / (2 * 0.01 * 0.01));
      return s;
    };
    const auto s = initial_kuramoto_state(p, peak, SeedSpec{2, 0});
    CHECK(order_parameter(s).r > 0.99);
    for (double x : s.angles) CHECK((x >= 0.0 && x < kTwoPi));
  }
  SUBCASE("determinism") {
    const KuramotoParams p{1.0, 0.25, kH1, 100};
    const auto a = initial_kuramoto_state(p, uniform_density(), SeedSpec{3, 1});
    const auto b = initial_kuramoto_state(p, uniform_density(), SeedSpec{3, 1});
    CHECK(a.angles == b.angles);
    CHECK(a.eta == b.eta);
  }
  CHECK_THROWS_AS(initial_kuramoto_state({1.0, 0.0, kH1, 10}, [](double, double) { return -1.0; }, SeedSpec{}),
                  ConfigError);
}

TEST_CASE("Euler-Maruyama step") {
  SUBCASE("free diffusion") {
    const KuramotoParams p{0.0, 0.0, kH1, 10000};
    auto s = initial_kuramoto_state(p, uniform_density(), SeedSpec{4, 0});
    KuramotoIntegrator integ(p, 0.01, SeedSpec{4, 0});
    std::vector<double> disp(s.angles.size(), 0.0);
    for (int k = 0; k < 100; ++k) {
      const auto prev = s.angles;
      integ.step(s);
      for (std::size_t j = 0; j < disp.size(); ++j) disp[j] += std::remainder(s.angles[j] - prev[j], kTwoPi);
    }
    double m = 0.0, v = 0.0;
    for (double d : disp) m += d;
    m /= static_cast<double>(disp.size());
    for (double d : disp) v += (d - m) * (d - m);
    v /= static_cast<double>(disp.size() - 1);
    CHECK(std::abs(v - 1.0) < 0.05);
  }
  SUBCASE("deterministic drift without noise") {
    const KuramotoParams p{0.0, 1.0, kH1, 50};
    auto s = initial_kuramoto_state(p, uniform_density(), SeedSpec{5, 0});
    const auto x0 = s.angles;
    KuramotoIntegrator integ(p, 0.01, SeedSpec{5, 0});
    integ.noise_scale = 0.0;
    integ.advance(s, 100);
    for (std::size_t j = 0; j < x0.size(); ++j) CHECK(angle_gap(s.angles[j], wrap_angle(x0[j] + s.eta[j])) < 1e-12);
  }
  SUBCASE("mean-field reduction matches pairwise sums") {
    const KuramotoParams p{1.25, 0.25, kH1, 200};
    auto fast = initial_kuramoto_state(p, uniform_density(), SeedSpec{6, 0});
    for (int k = 0; k < 50; ++k) {
      auto slow = fast;
      const auto xi = normals(200, 100 + static_cast<std::uint64_t>(k));
      step_kuramoto(fast, p, 0.01, xi);
      step_kuramoto_pairwise(slow, p, 0.01, xi);
      for (std::size_t j = 0; j < 200; ++j) CHECK(angle_gap(fast.angles[j], slow.angles[j]) < 1e-12);
    }
  }
  SUBCASE("rotation equivariance and frequency flip") {
    const KuramotoParams p{1.4, 0.3, kH1, 300};
    auto a = initial_kuramoto_state(p, uniform_density(), SeedSpec{7, 0});
    const double alpha = 1.234;
    auto b = a;
    auto c = a;
    for (auto& x : b.angles) x = wrap_angle(x + alpha);
    for (auto& x : c.angles) x = wrap_angle(-x);
    for (auto& e : c.eta) e = -e;
    for (int k = 0; k < 100; ++k) {
      const auto xi = normals(300, 500 + static_cast<std::uint64_t>(k));
      std::vector<double> mirrored(xi.size());
      std::transform(xi.begin(), xi.end(), mirrored.begin(), [](double z) { return -z; });
      step_kuramoto(a, p, 0.01, xi);
      step_kuramoto(b, p, 0.01, xi);
      step_kuramoto(c, p, 0.01, mirrored);
    }
    for (std::size_t j = 0; j < 300; ++j) {
      CHECK(angle_gap(b.angles[j], wrap_angle(a.angles[j] + alpha)) < 1e-12);
      CHECK(angle_gap(c.angles[j], wrap_angle(-a.angles[j])) < 1e-12);
    }
    const auto r = order_parameter(a);
    CHECK((r.r >= 0.0 && r.r <= 1.0));
  }
  SUBCASE("noise length must match") {
    RotatorState s{{0.1, 0.2}, {1.0, -1.0}, 0.0, 0};
    const KuramotoParams p{1.0, 0.0, kH1, 2};
    CHECK_THROWS_AS(step_kuramoto_pairwise(s, p, 0.01, std::vector<double>{0.0}), StructuralError);
    CHECK_THROWS_AS(step_kuramoto(s, p, 0.01, std::vector<double>{0.0}), StructuralError);
  }
}

TEST_CASE("Kuramoto observables") {
  SUBCASE("grid angles cancel every harmonic below N") {
    RotatorState s;
    const std::size_t n = 64;
    for (std::size_t j = 0; j < n; ++j) {
      s.angles.push_back(kTwoPi * static_cast<double>(j) / n);
      s.eta.push_back(1.0);
    }
    ObservableConfig cfg;
    cfg.omega = 0.37;
    cfg.h_max = 40;
    const auto row = kuramoto_order_parameter_row(s, cfg);
    for (std::size_t i = 0; i + 2 < row.size(); ++i) CHECK(std::abs(row[i]) < 1e-12);
  }
  const KuramotoParams p{1.0, 0.0, kH1, 500};
  const auto s = initial_kuramoto_state(p, uniform_density(), SeedSpec{8, 0});
  SUBCASE("kernel pair reduces at omega 0") {
    ObservableConfig cfg;
    const auto row = kuramoto_order_parameter_row(s, cfg);
    const auto labels = kuramoto_labels(cfg.h_max);
    double c = 0.0;
    for (double x : s.angles) c += std::cos(x);
    CHECK(row[0] == doctest::Approx(std::pow(500.0, 0.25) * c / 500.0).epsilon(1e-12));
    CHECK(labels.size() == row.size());
    CHECK(labels[2] == "V1_3");
  }
  SUBCASE("weighted norm against a direct sum") {
    ObservableConfig cfg;
    cfg.omega = 0.25;
    cfg.h_max = 12;
    cfg.r = 1.7;
    const auto row = kuramoto_order_parameter_row(s, cfg);
    const double f = std::pow(500.0, 0.25);
    double v3 = 0.0, v4 = 0.0;
    for (std::size_t j = 0; j < 500; ++j) {
      const double x = s.angles[j], e = s.eta[j];
      v3 += e * std::cos(x) + 0.5 * std::sin(x);
      v4 += 0.5 * std::cos(x) - e * std::sin(x);
    }
    double direct = std::pow(f * v3 / 500.0, 2) + std::pow(f * v4 / 500.0, 2);
    for (int h = 2; h <= 12; ++h) {
      double y[4] = {0, 0, 0, 0};
      for (std::size_t j = 0; j < 500; ++j) {
        y[0] += std::cos(h * s.angles[j]);
        y[1] += std::sin(h * s.angles[j]);
        y[2] += s.eta[j] * std::cos(h * s.angles[j]);
        y[3] += s.eta[j] * std::sin(h * s.angles[j]);
      }
      for (double v : y) direct += std::pow(1.0 + h * h, -1.7) * std::pow(f * v / 500.0, 2);
    }
    CHECK(row[row.size() - 2] == doctest::Approx(direct).epsilon(1e-12));
    CHECK(row.back() > 0.0);
  }
  SUBCASE("h_max below 2 is rejected") {
    ObservableConfig cfg;
    cfg.h_max = 1;
    CHECK_THROWS_AS(kuramoto_order_parameter_row(s, cfg), ConfigError);
  }
  SUBCASE("series rescales time") {
    std::vector<RotatorState> snaps{s};
    snaps[0].time = std::sqrt(500.0);
    const auto fs = kuramoto_order_parameters(snaps, ObservableConfig{});
    CHECK(fs.times[0] == doctest::Approx(1.0));
  }
}

TEST_CASE("critical coupling") {
  CHECK(theta_critical(0.25, kH1).theta_c == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(theta_critical(0.25, kH1).effective == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(theta_critical(0.0, DisorderLaw::parse("-2:0.3,0:0.4,2:0.3")).theta_c == doctest::Approx(1.0));
  const auto c = theta_critical(0.45, kH1);
  CHECK(c.theta_c == doctest::Approx(1.81).epsilon(1e-14));
  CHECK(c.effective == doctest::Approx(1.81).epsilon(1e-14));
  CHECK_FALSE(c.capped);
  CHECK(theta_critical(0.6, kH1).capped);
}

TEST_CASE("stationary densities") {
  SUBCASE("zero coherence is uniform") {
    const auto st = kuramoto_stationary(0.0, 1.7, 0.3, kH1);
    for (const auto& row : st.density) {
      for (double v : row) CHECK(v == doctest::Approx(1.0 / kTwoPi).epsilon(1e-14));
    }
  }
  SUBCASE("von Mises fixed point") {
    // r = I1(2θr)/I0(2θr) by bisection on Bessel series
    const double theta = 2.0;
    double lo = 0.1, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double g = std::cyl_bessel_i(1.0, 2 * theta * mid) / std::cyl_bessel_i(0.0, 2 * theta * mid) - mid;
      (g > 0 ? lo : hi) = mid;
    }
    CHECK(lo == doctest::Approx(0.831462024754257).epsilon(1e-12));
    const auto roots = solve_r_star(theta, 0.0, DisorderLaw::delta(0.0));
    REQUIRE(roots.size() == 2);
    CHECK(roots[0] == 0.0);
    CHECK(std::abs(roots[1] - lo) < 1e-6);
  }
  SUBCASE("normalization for random parameters") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 6; ++k) {
      const auto st = kuramoto_stationary(u(rng), 0.5 + 2.0 * u(rng), 0.45 * u(rng), kH1);
      CHECK(st.normalization_error() < 1e-8);
    }
  }
  CHECK_THROWS_AS(kuramoto_stationary(0.3, 1.5, 0.2, kH1, 256), ConfigError);
}

TEST_CASE("Galerkin mean-field equation") {
  SUBCASE("uniform stays uniform") {
    const auto q0 = KuramotoDensity::uniform(2, 16);
    const auto traj = mckean_vlasov_kuramoto(q0, 1.6, 0.3, kH1, 5.0, 1e-3, 1000);
    CHECK(traj.densities.back().max_abs_difference(q0) == 0.0);
  }
  SUBCASE("linear stability dichotomy") {
    const double omega = 0.25;
    const auto q0 = KuramotoDensity::from_function(
        [](double x, std::size_t) { return (1.0 + 0.01 * std::cos(x)) / kTwoPi; }, 2, 16);
    const double start = std::abs(q0.first_harmonic_total(kH1));
    const auto below = mckean_vlasov_kuramoto(q0, 1.1, omega, kH1, 5.0, 1e-3, 5000);
    const auto above = mckean_vlasov_kuramoto(q0, 1.6, omega, kH1, 5.0, 1e-3, 5000);
    CHECK(std::abs(below.densities.back().first_harmonic_total(kH1)) < start);
    CHECK(std::abs(above.densities.back().first_harmonic_total(kH1)) > start);
  }
  SUBCASE("finite-difference Jacobian at the uniform density") {
    // Coefficients c_h multiply e^{ihx}, so the Jacobian of the h-th block is
    // the dual operator restricted to e^{-ihx}.
    const double theta = 1.3, omega = 0.2;
    const auto law = DisorderLaw::parse("-1:0.3,-0.4:0.2,0.4:0.2,1:0.3");
    const std::size_t K = 8;
    const auto base = KuramotoDensity::uniform(law.size(), K);
    const double eps = 1e-7;
    for (int h = 1; h <= static_cast<int>(K); ++h) {
      const auto block = linearized_block(-h, theta, omega, law);
      for (std::size_t b = 0; b < law.size(); ++b) {
        auto q = base;
        q.coeffs[b][static_cast<std::size_t>(h)] += eps;
        const auto d = galerkin_rhs(q, theta, omega, law);
        for (std::size_t a = 0; a < law.size(); ++a) {
          const cd col = d.coeffs[a][static_cast<std::size_t>(h)] / eps;
          CHECK(std::abs(col - block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) < 1e-6);
        }
      }
    }
  }
  SUBCASE("truncation check") {
    const auto q0 = KuramotoDensity::uniform(2, 4);
    CHECK_THROWS_AS(mckean_vlasov_kuramoto(q0, 1.2, 0.1, kH1, 1.0), ConfigError);
  }
}

TEST_CASE("linearized spectrum") {
  const double omega = 0.25;
  const auto spec = linearized_kuramoto(1.25, omega, kH1, 32);
  auto expected = analytic_spectrum(omega, 32);
  REQUIRE(static_cast<Eigen::Index>(expected.size()) == spec.eigenvalues.size());
  std::vector<bool> used(expected.size(), false);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    double best = 1e300;
    std::size_t at = 0;
    for (std::size_t j = 0; j < expected.size(); ++j) {
      if (!used[j] && std::abs(spec.eigenvalues(i) - expected[j]) < best) {
        best = std::abs(spec.eigenvalues(i) - expected[j]);
        at = j;
      }
    }
    used[at] = true;
    worst = std::max(worst, best);
  }
  CHECK(worst < 1e-8);
  CHECK(spec.kernel_dimension() == 2);
  CHECK(spec.kernel_residual(omega, kH1) < 1e-12);

  const auto zero = linearized_kuramoto(1.0, 0.0, kH1, 16);
  CHECK(zero.kernel_dimension() == 2);
  CHECK(zero.kernel_residual(0.0, kH1) < 1e-14);

  const auto off = linearized_kuramoto(1.15, omega, kH1, 32);
  CHECK(off.kernel_dimension() == 0);
  CHECK(off.max_real_part() < 0.0);

  // eigenvalues with small imaginary part survive doubling K
  const auto big = linearized_kuramoto(1.25, omega, kH1, 64);
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    if (std::abs(spec.eigenvalues(i).imag()) > omega * 32 / 2) continue;
    double best = 1e300;
    for (Eigen::Index j = 0; j < big.eigenvalues.size(); ++j) best = std::min(best, std::abs(big.eigenvalues(j) - spec.eigenvalues(i)));
    CHECK(best < 1e-8);
  }
  CHECK_THROWS_AS(linearized_kuramoto(1.25, omega, kH1, 4), ConfigError);
}

TEST_CASE("fluctuation blocks") {
  const double omega = 0.25;
  const auto sys = kuramoto_clt_system(1.25, omega, 3);
  const auto& a1 = sys.block(1);
  CHECK(a1(0, 0) == doctest::Approx(0.125));
  CHECK(a1(1, 1) == doctest::Approx(0.125));
  CHECK(a1(2, 2) == doctest::Approx(-0.5));
  CHECK(a1(3, 3) == doctest::Approx(-0.5));
  CHECK(std::abs(a1(0, 3)) == doctest::Approx(omega));
  CHECK(std::abs(a1(1, 2)) == doctest::Approx(omega));
  const auto& a2 = sys.block(2);
  for (int i = 0; i < 4; ++i) CHECK(a2(i, i) == doctest::Approx(-2.0));

  const Eigen::Matrix4d s2 = sys.stationary_covariance(2);
  const double sig = sys.noise_amplitude(2);
  const Eigen::Matrix4d lyap = a2 * s2 + s2 * a2.transpose() + sig * sig * Eigen::Matrix4d::Identity();
  CHECK(lyap.cwiseAbs().maxCoeff() < 1e-12);
  CHECK((sys.covariance_at(2, 0.0) - KuramotoCltSystem::initial_covariance()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((sys.covariance_at(2, 30.0) - s2).cwiseAbs().maxCoeff() < 1e-10);
  // the critical block has a neutral direction, so no stationary law
  CHECK_THROWS_AS((void)sys.stationary_covariance(1), StructuralError);
}

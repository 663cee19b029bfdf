#include <doctest.h>

#include <cmath>
#include <random>

#include "meanfield/stat_harness.hpp"

using namespace meanfield;
using namespace meanfield::stats;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed, double mean = 0.0, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(mean, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

}  // namespace

TEST_CASE("exact Gibbs oracle") {
  SUBCASE("single spin without field") {
    const std::vector<double> f{0.0};
    const auto r = exact_gibbs_oracle(0.8, f);
    CHECK(r.probabilities[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(r.probabilities[1] == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("two spins against hand weights") {
    const double beta = 1.3;
    const std::vector<double> f{0.2, -0.7};
    const auto r = exact_gibbs_oracle(beta, f);
    std::vector<double> w(4);
    double z = 0.0;
    for (std::uint32_t s = 0; s < 4; ++s) {
      const int s0 = (s & 1u) ? 1 : -1, s1 = (s & 2u) ? 1 : -1;
      const double h = -(beta / 4.0) * (s0 + s1) * (s0 + s1) - beta * (0.2 * s0 - 0.7 * s1);
      w[s] = std::exp(-h);
      z += w[s];
    }
    for (std::size_t i = 0; i < 4; ++i) {
      const auto s = r.states[i];
      CHECK(r.probabilities[i] == doctest::Approx(w[s] / z).epsilon(1e-14));
    }
  }
  SUBCASE("six spins satisfy detailed balance") {
    const std::vector<double> f{0.3, -0.3, 0.3, -0.3, 0.3, -0.3};
    const auto r = exact_gibbs_oracle(1.1, f);
    CHECK(r.states.size() == 64);
    CHECK(r.generator_residual < 1e-12);
    CHECK(r.detailed_balance_residual < 1e-12);
    CHECK(r.gibbs_discrepancy < 1e-12);
    const std::vector<std::size_t> idx{1, 0, 1, 0, 1, 0};
    const auto counts = project_to_counts(r, idx, 2);
    CHECK(counts.size() == 16);
    double total = 0.0;
    for (const auto& [k, p] : counts) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(total_variation(counts, counts) == 0.0);
  }
  const std::vector<double> big(13, 0.0);
  CHECK_THROWS_AS(exact_gibbs_oracle(1.0, big), ConfigError);
}

TEST_CASE("Kolmogorov-Smirnov") {
  CHECK(kolmogorov_tail(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-10));
  CHECK(kolmogorov_tail(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-10));
  CHECK(kolmogorov_tail(1.5) == doctest::Approx(0.022217962616525127).epsilon(1e-10));

  const auto a = normals(5000, 1);
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  CHECK(ks_two_sample(a, a).p_value == doctest::Approx(1.0));
  const auto shifted = normals(5000, 2, 0.5);
  CHECK(ks_two_sample(a, shifted).p_value < 1e-10);

  SUBCASE("null calibration") {
    int rejections = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
      const auto x = normals(100000, 1000 + 2 * rep);
      const auto y = normals(100000, 1001 + 2 * rep);
      if (ks_two_sample(x, y).p_value < 0.05) ++rejections;
    }
    // Binomial(100, 0.05): P(X > 12) < 1e-3
    CHECK(rejections <= 12);
  }
}

TEST_CASE("chi-square goodness of fit") {
  const std::vector<double> obs{10, 20, 30};
  const std::vector<double> probs{1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto r = chi_square_gof(obs, probs);
  CHECK(r.statistic == doctest::Approx(10.0));
  CHECK(r.dof == 2.0);
  CHECK(r.p_value == doctest::Approx(0.006737946999085468).epsilon(1e-10));
}

TEST_CASE("summaries") {
  const std::vector<double> x{1, 2, 3, 4};
  const auto s = summarize(x);
  CHECK(s.mean == 2.5);
  CHECK(s.variance == doctest::Approx(5.0 / 3.0));
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  const auto c = covariance(x, x);
  CHECK(c.value == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("collapse test") {
  CollapseTestSpec spec;
  spec.label = "synthetic";
  spec.ladder = {1000, 4000, 16000};
  spec.predicted_exponent = -0.125;
  spec.seed = 9;

  SUBCASE("identically zero is a degenerate pass") {
    const std::vector<std::vector<double>> z(3, std::vector<double>(200, 0.0));
    const auto v = collapse_test(spec, z);
    CHECK(v.collapse);
    CHECK(v.degenerate);
  }
  SUBCASE("power-law decay is detected") {
    std::vector<std::vector<double>> s;
    std::mt19937_64 rng(5);
    std::lognormal_distribution<double> noise(0.0, 0.02);
    for (auto n : spec.ladder) {
      std::vector<double> col(400);
      for (auto& x : col) x = std::pow(static_cast<double>(n), -0.125) * noise(rng);
      s.push_back(col);
    }
    const auto v = collapse_test(spec, s);
    CHECK(v.collapse);
    CHECK(v.strictly_decreasing);
    CHECK(v.slope == doctest::Approx(-0.125).epsilon(0.02));
    CHECK(v.ci_low < -0.125);
    CHECK(v.ci_high > -0.125);
  }
  SUBCASE("an order-one observable does not collapse") {
    std::vector<std::vector<double>> s;
    for (std::size_t i = 0; i < 3; ++i) {
      auto col = normals(400, 50 + i);
      for (auto& x : col) x = std::abs(x);
      s.push_back(col);
    }
    CHECK_FALSE(collapse_test(spec, s).collapse);
  }
  SUBCASE("ladder validation") {
    auto bad = spec;
    bad.ladder = {1000, 4000};
    CHECK_THROWS_AS(collapse_test(bad, std::vector<std::vector<double>>(2, std::vector<double>(200, 1.0))),
                    ConfigError);
    bad.ladder = {1000, 4000, 9000};
    CHECK_THROWS_AS(collapse_test(bad, std::vector<std::vector<double>>(3, std::vector<double>(200, 1.0))),
                    ConfigError);
    CHECK_THROWS_AS(collapse_test(spec, std::vector<std::vector<double>>(3, std::vector<double>(10, 1.0))),
                    ConfigError);
  }
  CHECK(cw_collapse_exponent() == -0.0625);
  CHECK(kuramoto_collapse_exponent() == -0.125);
}

TEST_CASE("slope regression") {
  const std::vector<double> t{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<std::vector<double>> paths;
  for (double k : {-1.0, 0.0, 3.0}) {
    std::vector<double> y;
    for (double s : t) y.push_back(k * s + 0.25);
    paths.push_back(y);
  }
  const auto r = slope_regression(t, paths);
  CHECK(r.slopes[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(r.slopes[1]) < 1e-14);
  CHECK(r.slopes[2] == doctest::Approx(3.0).epsilon(1e-14));
  const std::vector<std::vector<double>> flat(5, std::vector<double>(5, 0.0));
  const auto z = slope_regression(t, flat);
  CHECK(z.summary.variance == 0.0);
}

TEST_CASE("distributional convergence") {
  const auto limit = normals(50000, 100);
  const std::vector<std::int64_t> ladder{100, 400, 1600};
  SUBCASE("samples approaching the limit law pass") {
    std::vector<std::vector<double>> finite;
    const double shift[3] = {0.4, 0.1, 0.0};
    for (std::size_t i = 0; i < 3; ++i) finite.push_back(normals(2000, 200 + i, shift[i]));
    const auto r = distributional_convergence_test(ladder, finite, limit, 1.0, 1.0);
    CHECK(r.passed);
  }
  SUBCASE("biased samples fail") {
    std::vector<std::vector<double>> finite;
    for (std::size_t i = 0; i < 3; ++i) finite.push_back(normals(2000, 300 + i, 0.5 / static_cast<double>(i + 1)));
    const auto r = distributional_convergence_test(ladder, finite, limit, 1.0, 1.0);
    CHECK_FALSE(r.passed);
    CHECK(r.ks[0].statistic > r.ks[2].statistic);
  }
  SUBCASE("mismatched times or small limit sample are rejected") {
    std::vector<std::vector<double>> finite(3, normals(2000, 7));
    CHECK_THROWS_AS(distributional_convergence_test(ladder, finite, limit, 1.0, 2.0), ConfigError);
    const auto small = normals(1000, 8);
    CHECK_THROWS_AS(distributional_convergence_test(ladder, finite, small, 1.0, 1.0), ConfigError);
  }
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "meanfield/cw_analysis.hpp"
#include "meanfield/cw_dynamics.hpp"
#include "meanfield/stat_harness.hpp"

using namespace meanfield;
using namespace meanfield::cw;

namespace {

// Per-spin Gillespie chain with N independent clocks; reference for the
// aggregated simulator.
double per_spin_magnetization(std::vector<int> spins, const std::vector<double>& eta, double beta, double t_end,
                              std::mt19937_64& rng) {
  const std::size_t n = spins.size();
  double t = 0.0;
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> rate(n);
  for (;;) {
    double m = 0.0;
    for (int s : spins) m += s;
    m /= static_cast<double>(n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += rate[j] = std::exp(-beta * spins[j] * (m + eta[j]));
    t += expo(rng) / total;
    if (t > t_end) return m;
    double u = unif(rng) * total;
    std::size_t j = 0;
    while (j + 1 < n && u >= rate[j]) u -= rate[j++];
    spins[j] = -spins[j];
  }
}

}  // namespace

TEST_CASE("initial state") {
  const auto law = DisorderLaw::symmetric_pair(0.3);
  const CwParams p{1.0, law, 500};
  SUBCASE("all spins up") {
    const auto s = initial_cw_state(p, std::vector<double>{1.0, 1.0}, SeedSpec{1, 0});
    CHECK(s.down == std::vector<std::int64_t>{0, 0});
    CHECK(s.magnetization() == 1.0);
    s.check_invariants();
  }
  SUBCASE("centered product law") {
    const auto q = stationary_profile(1.0, law, 0.0);
    double mean = 0.0;
    for (std::uint64_t i = 0; i < 1000; ++i) mean += initial_cw_state(p, q.up, SeedSpec{2, i}).magnetization();
    mean /= 1000.0;
    CHECK(std::abs(mean) < 4.0 * std::sqrt(1.0 / (1000.0 * 500.0)));
  }
  SUBCASE("binomial counts for N=2") {
    const CwParams p2{1.0, DisorderLaw::delta(0.0), 2};
    std::vector<double> counts(3, 0.0);
    for (std::uint64_t i = 0; i < 100000; ++i) {
      counts[static_cast<std::size_t>(initial_cw_state(p2, std::vector<double>{0.5}, SeedSpec{3, i}).up[0])] += 1.0;
    }
    const auto chi = stats::chi_square_gof(counts, std::vector<double>{0.25, 0.5, 0.25});
    CHECK(chi.p_value > 0.001);
  }
  CHECK_THROWS_AS(initial_cw_state(p, std::vector<double>{1.2, 0.5}, SeedSpec{}), ConfigError);
  CHECK_THROWS_AS(initial_cw_state(p, std::vector<double>{0.5}, SeedSpec{}), ConfigError);
}

TEST_CASE("cell rates") {
  SUBCASE("all up at beta 1") {
    const CwParams p{1.0, DisorderLaw::delta(0.0), 10};
    const AggregatedCwState s{{10}, {0}, 10, 10, 0.0};
    const auto r = cell_rates(s, p);
    CHECK(r.at(state_index(1), 0) == doctest::Approx(10.0 * std::exp(-1.0)).epsilon(1e-14));
    CHECK(r.at(state_index(-1), 0) == 0.0);
  }
  SUBCASE("zero magnetization, zero field") {
    const CwParams p{1.7, DisorderLaw::delta(0.0), 10};
    const AggregatedCwState s{{5}, {5}, 10, 0, 0.0};
    const auto r = cell_rates(s, p);
    CHECK(r.at(0, 0) == 5.0);
    CHECK(r.at(1, 0) == 5.0);
  }
  SUBCASE("scalar example") {
    // m_N = 0.1 with 100 up spins on the +0.3 atom
    const CwParams p{1.116, DisorderLaw::symmetric_pair(0.3), 1000};
    const AggregatedCwState s{{450, 100}, {50, 400}, 1000, 100, 0.0};
    s.check_invariants();
    CHECK(cell_rates(s, p).at(state_index(1), 1) == doctest::Approx(63.99277497606962).epsilon(1e-13));
  }
}

TEST_CASE("simulation invariants and laws") {
  SUBCASE("per-field conservation and event bookkeeping") {
    const auto law = DisorderLaw::parse("-0.5:0.25,0:0.5,0.5:0.25");
    const CwParams p{1.3, law, 300};
    const auto s0 = initial_cw_state(p, std::vector<double>{0.2, 0.5, 0.9}, SeedSpec{9, 1});
    CwSimulationOptions opt;
    opt.record_events = true;
    const std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
    const auto traj = simulate_cw(s0, p, 2.0, grid, SeedSpec{9, 1}, opt);
    CHECK(traj.snapshots.size() == grid.size());
    CHECK(traj.snapshots.front().same_counts(s0));
    for (const auto& s : traj.snapshots) {
      s.check_invariants();
      for (std::size_t k = 0; k < 3; ++k) CHECK(s.up[k] + s.down[k] == s0.up[k] + s0.down[k]);
    }
    CHECK(static_cast<std::int64_t>(traj.events.size()) == traj.n_events);
    for (std::size_t i = 1; i < traj.events.size(); ++i) CHECK(traj.events[i].time > traj.events[i - 1].time);
    // replay the events
    auto s = s0;
    for (const auto& e : traj.events) {
      if (e.spin > 0) {
        --s.up[e.field];
        ++s.down[e.field];
      } else {
        ++s.up[e.field];
        --s.down[e.field];
      }
    }
    CHECK(s.same_counts(traj.final_state));
  }
  SUBCASE("determinism") {
    const CwParams p{1.0, DisorderLaw::symmetric_pair(0.3), 200};
    const auto s0 = initial_cw_state(p, std::vector<double>{0.5, 0.5}, SeedSpec{5, 2});
    const std::vector<double> grid{1.0, 3.0};
    const auto a = simulate_cw(s0, p, 3.0, grid, SeedSpec{5, 2});
    const auto b = simulate_cw(s0, p, 3.0, grid, SeedSpec{5, 2});
    CHECK(a.n_events == b.n_events);
    CHECK(a.final_state.same_counts(b.final_state));
  }
  SUBCASE("symmetric two-state chain") {
    const CwParams p{0.0, DisorderLaw::delta(0.0), 1};
    const AggregatedCwState s0{{1}, {0}, 1, 1, 0.0};
    double up_time = 0.0;
    CwSimulationOptions opt;
    opt.on_sojourn = [&](const AggregatedCwState& s, double dwell) { up_time += s.up[0] * dwell; };
    (void)simulate_cw(s0, p, 1e4, std::vector<double>{}, SeedSpec{11, 0}, opt);
    CHECK(std::abs(up_time / 1e4 - 0.5) < 0.02);
  }
  SUBCASE("event count is Poisson(N t) at beta 0") {
    const CwParams p{0.0, DisorderLaw::delta(0.0), 100};
    std::vector<double> counts;
    for (std::uint64_t i = 0; i < 500; ++i) {
      const auto s0 = initial_cw_state(p, std::vector<double>{0.5}, SeedSpec{12, i});
      counts.push_back(static_cast<double>(simulate_cw(s0, p, 10.0, std::vector<double>{}, SeedSpec{12, i}).n_events));
    }
    const auto sm = stats::summarize(counts);
    CHECK(std::abs(sm.mean - 1000.0) < 3.0 * sm.se_mean);
  }
  SUBCASE("aggregated and per-spin chains have the same law") {
    const auto law = DisorderLaw::symmetric_pair(0.3);
    const double beta = 1.2;
    const std::size_t n = 20;
    const CwParams p{beta, law, static_cast<std::int64_t>(n)};
    std::vector<int> spins(n);
    std::vector<std::size_t> fields(n);
    std::vector<double> eta(n);
    for (std::size_t j = 0; j < n; ++j) {
      spins[j] = j % 3 == 0 ? -1 : 1;
      fields[j] = j % 2;
      eta[j] = law.value(fields[j]);
    }
    const auto s0 = AggregatedCwState::from_particles(spins, fields, 2);
    std::vector<double> agg, direct;
    std::mt19937_64 rng(77);
    for (std::uint64_t i = 0; i < 10000; ++i) {
      agg.push_back(simulate_cw(s0, p, 1.0, std::vector<double>{}, SeedSpec{13, i}).final_state.magnetization());
      direct.push_back(per_spin_magnetization(spins, eta, beta, 1.0, rng));
    }
    CHECK(stats::ks_two_sample(agg, direct).p_value > 0.001);
  }
}

TEST_CASE("order parameters") {
  const auto law = DisorderLaw::symmetric_pair(0.3);
  const double beta = *critical_beta(law);
  const auto lin = linearized_cw(beta, law, 0.0);
  const auto q = stationary_profile(beta, law, 0.0);
  SUBCASE("homogeneous reduction") {
    const auto d = DisorderLaw::delta(0.0);
    const AggregatedCwState s{{70}, {30}, 100, 40, 0.0};
    const auto row = cw_order_parameter_row(s, d, {{1.0}}, std::vector<double>{0.5}, SpaceScale::kModerate);
    CHECK(row[0] == doctest::Approx(std::pow(100.0, 0.25) * 0.4).epsilon(1e-14));
  }
  SUBCASE("dense per-particle sums") {
    const CwParams p{beta, law, 100};
    const auto s0 = initial_cw_state(p, q.up, SeedSpec{21, 0});
    const auto s = simulate_cw(s0, p, 2.0, std::vector<double>{}, SeedSpec{21, 0}).final_state;
    const auto row = cw_order_parameter_row(s, law, lin.basis, q.up, SpaceScale::kSqrtN);
    // expand the counts into particles and sum spin by spin
    for (std::size_t i = 0; i < lin.basis.size(); ++i) {
      double dense = 0.0;
      for (std::size_t k = 0; k < 2; ++k) {
        for (std::int64_t a = 0; a < s.up[k]; ++a) dense += lin.basis[i][k];
        for (std::int64_t a = 0; a < s.down[k]; ++a) dense -= lin.basis[i][k];
      }
      dense /= 100.0;
      double ref = 0.0;
      for (std::size_t k = 0; k < 2; ++k) ref += lin.basis[i][k] * (2.0 * q.up[k] - 1.0) * law.weight(k);
      CHECK(row[i] == doctest::Approx(10.0 * (dense - ref)).epsilon(1e-12));
    }
  }
  SUBCASE("observed time") {
    const CwParams p{beta, law, 10000};
    const auto s0 = initial_cw_state(p, q.up, SeedSpec{22, 0});
    const std::vector<double> grid{0.0, 10.0};
    const auto traj = simulate_cw(s0, p, 10.0, grid, SeedSpec{22, 0});
    const auto fs = cw_order_parameters(traj, law, lin.basis, q.up, SpaceScale::kModerate, TimeScale::kNQuarter);
    CHECK(fs.times.back() == doctest::Approx(1.0));
    CHECK_THROWS(cw_order_parameters(traj, law, {{1.0}}, q.up, SpaceScale::kModerate, TimeScale::kNQuarter));
  }
}

TEST_CASE("stationary states") {
  SUBCASE("subcritical homogeneous") {
    const auto scan = cw_stationary_states(0.5, DisorderLaw::delta(0.0));
    REQUIRE(scan.states.size() == 1);
    CHECK(scan.states[0].m_star == 0.0);
    CHECK(scan.states[0].stability == Stability::kStable);
  }
  SUBCASE("supercritical homogeneous") {
    const auto scan = cw_stationary_states(2.0, DisorderLaw::delta(0.0));
    REQUIRE(scan.states.size() == 3);
    CHECK(scan.states[1].stability == Stability::kUnstable);
    CHECK(scan.states[2].m_star == doctest::Approx(0.9575040240772688).epsilon(1e-11));
    CHECK(scan.states[0].m_star == doctest::Approx(-0.9575040240772688).epsilon(1e-11));
    CHECK(scan.states[2].stability == Stability::kStable);
    for (const auto& st : scan.states) {
      CHECK(st.residual < 1e-12);
      const auto ref = stationary_profile(2.0, DisorderLaw::delta(0.0), st.m_star);
      CHECK(st.profile.sup_distance(ref) < 1e-10);
    }
  }
  SUBCASE("critical disordered") {
    const auto law = DisorderLaw::symmetric_pair(0.3);
    const auto scan = cw_stationary_states(*critical_beta(law), law);
    REQUIRE(scan.states.size() == 1);
    CHECK(scan.states[0].stability == Stability::kNeutral);
    CHECK(std::abs(scan.states[0].criticality_gap) < 1e-10);
  }
}

TEST_CASE("critical beta") {
  CHECK(*critical_beta(DisorderLaw::delta(0.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(critical_beta(DisorderLaw::symmetric_pair(1.0)).has_value());
  // maximum of β/cosh²(β) by a fine scan
  double gmax = 0.0;
  for (int i = 1; i < 400000; ++i) {
    const double b = i * 1e-5;
    gmax = std::max(gmax, b / std::pow(std::cosh(b), 2));
  }
  CHECK(gmax < 1.0);
  CHECK(gmax == doctest::Approx(0.4477).epsilon(1e-3));

  const auto law = DisorderLaw::symmetric_pair(0.3);
  const double bc = *critical_beta(law);
  CHECK(bc == doctest::Approx(1.11643672608868).epsilon(1e-12));
  CHECK(std::abs(criticality_gap(bc, law)) < 1e-12);
  CHECK(criticality_gap(bc - 0.01, law) < 0.0);
  CHECK(criticality_gap(bc + 0.01, law) > 0.0);
  const double target = 4.0 * law.expect([&](double e) { return std::pow(std::tanh(bc * e), 2); });
  CHECK(target == doctest::Approx(0.41717268293960214).epsilon(1e-12));
}

TEST_CASE("McKean-Vlasov relaxation") {
  const auto law = DisorderLaw::delta(0.0);
  const auto q0 = CwProfile::from_plus({0.75});
  const auto traj = mckean_vlasov_cw(q0, 0.7, law, 10.0, 1e-3, 10);
  double prev = 1.0;
  for (const auto& p : traj.profiles) {
    const double m = p.magnetization(law);
    CHECK(m <= prev + 1e-15);
    CHECK(m >= 0.0);
    CHECK(p.normalization_error() < 1e-9);
    prev = m;
  }
  CHECK(prev < 0.05);
  // one-dimensional oracle ṁ = 2 sinh(βm) − 2m cosh(βm) integrated finely
  double m = 0.5;
  const double h = 1e-5;
  for (int i = 0; i < 1000000; ++i) {
    const auto f = [](double x) { return 2.0 * std::sinh(0.7 * x) - 2.0 * x * std::cosh(0.7 * x); };
    const double k1 = f(m), k2 = f(m + 0.5 * h * k1), k3 = f(m + 0.5 * h * k2), k4 = f(m + h * k3);
    m += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  CHECK(prev == doctest::Approx(m).epsilon(1e-9));
  // the relaxation rate near m = 0 is 2(1 − β) = 0.6, so dt = 8 leaves the RK4 stability interval
  CHECK_NOTHROW(mckean_vlasov_cw(q0, 0.7, law, 10.0, 2.0));
  CHECK_THROWS_AS(mckean_vlasov_cw(q0, 0.7, law, 80.0, 8.0), StepSizeError);
}

TEST_CASE("linearized operator") {
  SUBCASE("homogeneous critical point") {
    const auto lin = linearized_cw(1.0, DisorderLaw::delta(0.0), 0.0);
    CHECK(std::abs(lin.eigenvalues(0)) < 1e-14);
    CHECK(lin.basis[0][0] == doctest::Approx(1.0));
  }
  for (const auto& law : {DisorderLaw::symmetric_pair(0.3), DisorderLaw::parse("-0.5:0.25,0:0.5,0.5:0.25"),
                          DisorderLaw::parse("-1:0.1,-0.2:0.4,0.2:0.4,1:0.1")}) {
    const double beta = *critical_beta(law);
    const auto lin = linearized_cw(beta, law, 0.0);
    const std::size_t m = law.size();
    CHECK(std::abs(lin.eigenvalues(0)) < 1e-10);
    for (std::size_t i = 1; i < m; ++i) CHECK(lin.eigenvalues(static_cast<Eigen::Index>(i)) >= 1.0 - 1e-8);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(lin.nu_inner(lin.basis[i], lin.basis[j]) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10));
      }
      const auto lphi = lin.apply(lin.basis[i]);
      for (std::size_t k = 0; k < m; ++k) {
        CHECK(std::abs(lphi[k] - lin.eigenvalues(static_cast<Eigen::Index>(i)) * lin.basis[i][k]) < 1e-10);
      }
    }
    for (std::size_t k = 0; k < m; ++k) {
      CHECK(lin.basis[0][k] * std::cosh(beta * law.value(k)) ==
            doctest::Approx(lin.basis[0][0] * std::cosh(beta * law.value(0))).epsilon(1e-10));
    }
    // self-adjointness on random vectors
    std::mt19937_64 rng(31);
    std::normal_distribution<double> z;
    std::vector<double> f(m), g(m);
    for (std::size_t k = 0; k < m; ++k) {
      f[k] = z(rng);
      g[k] = z(rng);
    }
    CHECK(std::abs(lin.nu_inner(lin.apply(f), g) - lin.nu_inner(f, lin.apply(g))) < 1e-12);
  }
}

TEST_CASE("CLT parameters") {
  SUBCASE("homogeneous law has no random drift") {
    const auto law = DisorderLaw::delta(0.0);
    const auto lin = linearized_cw(0.5, law, 0.0);
    const auto clt = cw_clt_parameters(lin, 0.5, law, 0.0);
    CHECK(clt.cov_h.norm() == 0.0);
    CHECK(clt.cov_x0(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    const auto unit = cw_clt_parameters(lin, 0.5, law, 0.0, {{1.0}});
    CHECK(unit.cov_x0(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    // OU variance at t: λ = cosh(0) − 0.5 = 0.5, drift 1, b = 2
    const double k = 1.0;
    const double expected = std::exp(-2 * k) * 1.0 + 4.0 / (2 * k) * (1 - std::exp(-2 * k));
    CHECK(unit.predicted_variance(0, 1.0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(unit.predicted_variance(0, 1.0) == doctest::Approx(1.8646647167633872).epsilon(1e-12));
  }
  SUBCASE("slope variance for a scaled kernel direction") {
    const auto law = DisorderLaw::parse("-0.5:0.25,0:0.5,0.5:0.25");
    const double beta = *critical_beta(law);
    const auto lin = linearized_cw(beta, law, 0.0);
    const double c = 1.7;
    std::vector<double> phi0;
    for (std::size_t k = 0; k < law.size(); ++k) phi0.push_back(c / std::cosh(beta * law.value(k)));
    std::vector<std::vector<double>> basis{phi0};
    for (std::size_t i = 1; i < lin.basis.size(); ++i) basis.push_back(lin.basis[i]);
    const auto clt = cw_clt_parameters(lin, beta, law, 0.0, basis);
    const double expected = c * c * law.expect([&](double e) { return std::pow(std::tanh(beta * e), 2); });
    CHECK(clt.cov_h(0, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("covariances are positive semidefinite") {
    const auto law = DisorderLaw::parse("-1:0.1,-0.2:0.4,0.2:0.4,1:0.1");
    for (double beta : {0.3, 1.0, 2.5}) {
      const auto lin = linearized_cw(beta, law, 0.0);
      const auto clt = cw_clt_parameters(lin, beta, law, 0.0);
      for (const auto* m : {&clt.cov_x0, &clt.cov_h}) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*m);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        CHECK((*m - m->transpose()).norm() < 1e-14);
      }
    }
  }
}

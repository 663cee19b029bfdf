#include "meanfield/stat_harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/math/special_functions/gamma.hpp>

namespace meanfield::stats {

double cw_energy(std::uint32_t state, double beta, std::span<const double> fields) {
  const std::size_t n = fields.size();
  double sum = 0.0;
  double field_term = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const int s = GibbsOracleResult::spin(state, j);
    sum += s;
    field_term += fields[j] * s;
  }
  return -beta / (2.0 * static_cast<double>(n)) * sum * sum - beta * field_term;
}

GibbsOracleResult exact_gibbs_oracle(double beta, std::span<const double> fields) {
  const std::size_t n = fields.size();
  if (n == 0 || n > 12) throw ConfigError("exact_gibbs_oracle: N must lie in [1, 12]");
  const std::size_t n_states = std::size_t{1} << n;
  GibbsOracleResult out;
  out.n = n;
  out.states.resize(n_states);
  out.energies.resize(n_states);
  std::iota(out.states.begin(), out.states.end(), 0u);

  const auto rate = [&](std::uint32_t x, std::size_t j) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += GibbsOracleResult::spin(x, k);
    const double m = sum / static_cast<double>(n);
    return std::exp(-beta * GibbsOracleResult::spin(x, j) * (m + fields[j]));
  };

  // Qᵀ with the last balance equation replaced by normalization
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n_states * (n + 2));
  std::vector<double> exit_rate(n_states, 0.0);
  const auto last = static_cast<std::uint32_t>(n_states - 1);
  for (std::uint32_t x = 0; x < n_states; ++x) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint32_t y = x ^ (1u << j);
      const double q = rate(x, j);
      exit_rate[x] += q;
      if (y != last) triplets.emplace_back(static_cast<int>(y), static_cast<int>(x), q);
    }
  }
  for (std::uint32_t x = 0; x < n_states; ++x) {
    if (x != last) triplets.emplace_back(static_cast<int>(x), static_cast<int>(x), -exit_rate[x]);
    triplets.emplace_back(static_cast<int>(last), static_cast<int>(x), 1.0);
  }
  const auto dim = static_cast<Eigen::Index>(n_states);
  Eigen::SparseMatrix<double> a(dim, dim);
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw InternalError("exact_gibbs_oracle: factorization failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  rhs(dim - 1) = 1.0;
  const Eigen::VectorXd pi = lu.solve(rhs);
  out.probabilities.assign(pi.data(), pi.data() + dim);

  double z = 0.0;
  double e_min = std::numeric_limits<double>::infinity();
  for (std::uint32_t x = 0; x < n_states; ++x) {
    out.energies[x] = cw_energy(x, beta, fields);
    e_min = std::min(e_min, out.energies[x]);
  }
  out.gibbs.resize(n_states);
  for (std::uint32_t x = 0; x < n_states; ++x) {
    out.gibbs[x] = std::exp(-(out.energies[x] - e_min));
    z += out.gibbs[x];
  }
  for (auto& g : out.gibbs) g /= z;

  for (std::uint32_t x = 0; x < n_states; ++x) {
    double flow = -out.probabilities[x] * exit_rate[x];
    for (std::size_t j = 0; j < n; ++j) {
      const std::uint32_t y = x ^ (1u << j);
      flow += out.probabilities[y] * rate(y, j);
      const double db = out.probabilities[x] * rate(x, j) - out.probabilities[y] * rate(y, j);
      out.detailed_balance_residual = std::max(out.detailed_balance_residual, std::abs(db));
    }
    out.generator_residual = std::max(out.generator_residual, std::abs(flow));
    out.gibbs_discrepancy =
        std::max(out.gibbs_discrepancy, std::abs(out.probabilities[x] - out.gibbs[x]));
  }
  return out;
}

std::map<CountClass, double> project_to_counts(const GibbsOracleResult& oracle,
                                               std::span<const std::size_t> field_index,
                                               std::size_t n_fields) {
  if (field_index.size() != oracle.n) throw StructuralError("project_to_counts: one atom per spin");
  std::map<CountClass, double> out;
  for (std::size_t s = 0; s < oracle.states.size(); ++s) {
    CountClass c(n_fields, 0);
    for (std::size_t j = 0; j < oracle.n; ++j) {
      if (GibbsOracleResult::spin(oracle.states[s], j) > 0) ++c.at(field_index[j]);
    }
    out[c] += oracle.probabilities[s];
  }
  return out;
}

double total_variation(const std::map<CountClass, double>& p, const std::map<CountClass, double>& q) {
  double acc = 0.0;
  for (const auto& [k, v] : p) {
    const auto it = q.find(k);
    acc += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q) {
    if (!p.contains(k)) acc += std::abs(v);
  }
  return 0.5 * acc;
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double pi = 3.141592653589793238462643383279;
  if (lambda < 1.18) {
    // P(K ≤ λ) = √(2π)/λ Σ_k exp(−(2k−1)²π²/(8λ²))
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double a = (2.0 * k - 1.0) * pi / lambda;
      s += std::exp(-a * a / 8.0);
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 20 || b.size() < 20) throw ConfigError("ks_two_sample: each sample needs >= 20 points");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size());
  const double nb = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  TestResult r;
  r.statistic = d;
  r.p_value = kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

TestResult chi_square_gof(std::span<const double> observed, std::span<const double> expected_probs) {
  if (observed.size() != expected_probs.size() || observed.size() < 2) {
    throw ConfigError("chi_square_gof: need matching category counts (>= 2)");
  }
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  const double psum = std::accumulate(expected_probs.begin(), expected_probs.end(), 0.0);
  if (!(total > 0.0) || !(psum > 0.0)) throw ConfigError("chi_square_gof: empty sample or law");
  TestResult r;
  std::size_t cells = 0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double e = total * expected_probs[k] / psum;
    if (e <= 0.0) {
      if (observed[k] > 0.0) r.statistic = std::numeric_limits<double>::infinity();
      continue;
    }
    r.statistic += (observed[k] - e) * (observed[k] - e) / e;
    ++cells;
  }
  r.dof = static_cast<double>(cells) - 1.0;
  r.p_value = std::isfinite(r.statistic) && r.dof > 0.0
                  ? boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic)
                  : 0.0;
  return r;
}

SampleSummary summarize(std::span<const double> x) {
  SampleSummary s;
  s.n = x.size();
  if (s.n < 2) throw ConfigError("summarize: need at least 2 values");
  const double n = static_cast<double>(s.n);
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d = (v - s.mean) * (v - s.mean);
    m2 += d;
    m4 += d * d;
  }
  s.variance = m2 / (n - 1.0);
  s.se_mean = std::sqrt(s.variance / n);
  const double mean_d = m2 / n;
  s.se_variance = std::sqrt(std::max(0.0, m4 / n - mean_d * mean_d) / n);
  return s;
}

CovarianceEstimate covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("covariance: need paired samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double s = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double p = (x[i] - mx) * (y[i] - my);
    s += p;
    s2 += p * p;
  }
  CovarianceEstimate c;
  c.value = s / (n - 1.0);
  const double mp = s / n;
  c.se = std::sqrt(std::max(0.0, s2 / n - mp * mp) / n);
  return c;
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw ConfigError("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

double cw_collapse_exponent(double d) { return -0.125 * (1.0 - 2.0 / d); }
double kuramoto_collapse_exponent(double d) { return 1.0 / (2.0 * d) - 0.25; }

namespace {

double loglog_slope(const std::vector<std::int64_t>& ladder, const std::vector<double>& med) {
  const std::size_t k = ladder.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    mx += std::log(static_cast<double>(ladder[i]));
    my += std::log(med[i]);
  }
  mx /= static_cast<double>(k);
  my /= static_cast<double>(k);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double dx = std::log(static_cast<double>(ladder[i])) - mx;
    sxy += dx * (std::log(med[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace

CollapseVerdict collapse_test(const CollapseTestSpec& spec,
                              const std::vector<std::vector<double>>& suprema) {
  const auto& ladder = spec.ladder;
  if (ladder.size() < 3) throw ConfigError("collapse_test: the N ladder needs at least 3 values");
  if (suprema.size() != ladder.size()) throw ConfigError("collapse_test: one sample per ladder value");
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    if (ladder[i] <= ladder[i - 1]) throw ConfigError("collapse_test: ladder must be strictly increasing");
    const double r0 = static_cast<double>(ladder[1]) / static_cast<double>(ladder[0]);
    const double ri = static_cast<double>(ladder[i]) / static_cast<double>(ladder[i - 1]);
    if (std::abs(ri - r0) > 1e-9 * r0) throw ConfigError("collapse_test: ladder must be geometric");
  }
  for (const auto& s : suprema) {
    if (s.size() < spec.min_replicas) {
      std::ostringstream os;
      os << "collapse_test: need >= " << spec.min_replicas << " replicas per N, got " << s.size();
      throw ConfigError(os.str());
    }
  }

  CollapseVerdict v;
  v.predicted_exponent = spec.predicted_exponent;
  bool all_zero = true;
  for (const auto& s : suprema) {
    v.medians.push_back(median(s));
    for (double x : s) all_zero = all_zero && x == 0.0;
  }
  if (all_zero) {
    v.collapse = true;
    v.degenerate = true;
    v.strictly_decreasing = false;
    v.slope = std::numeric_limits<double>::quiet_NaN();
    v.ci_low = v.ci_high = v.slope;
    v.message = "degenerate-pass: observable identically zero";
    return v;
  }
  v.strictly_decreasing = true;
  for (std::size_t i = 1; i < v.medians.size(); ++i) {
    v.strictly_decreasing = v.strictly_decreasing && v.medians[i] < v.medians[i - 1];
  }
  const bool positive = std::all_of(v.medians.begin(), v.medians.end(), [](double m) { return m > 0.0; });
  if (!positive) {
    v.slope = -std::numeric_limits<double>::infinity();
    v.ci_low = v.ci_high = v.slope;
    v.collapse = v.strictly_decreasing;
    v.message = "median reached zero along the ladder";
    return v;
  }
  v.slope = loglog_slope(ladder, v.medians);

  std::mt19937_64 rng(splitmix64(spec.seed ^ 0xc011a95eULL));
  std::vector<double> boot;
  boot.reserve(spec.bootstrap_resamples);
  std::vector<double> med(ladder.size());
  std::vector<double> resample;
  for (std::size_t b = 0; b < spec.bootstrap_resamples; ++b) {
    bool ok = true;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      const auto& s = suprema[i];
      std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
      resample.resize(s.size());
      for (auto& x : resample) x = s[pick(rng)];
      med[i] = median(resample);
      ok = ok && med[i] > 0.0;
    }
    if (ok) boot.push_back(loglog_slope(ladder, med));
  }
  const double alpha = 1.0 - spec.confidence;
  if (boot.size() >= 2) {
    v.ci_low = quantile(boot, 0.5 * alpha);
    v.ci_high = quantile(boot, 1.0 - 0.5 * alpha);
  } else {
    v.ci_low = -std::numeric_limits<double>::infinity();
    v.ci_high = std::numeric_limits<double>::infinity();
  }
  v.collapse = v.strictly_decreasing && v.slope < 0.0 && v.ci_high < 0.0;
  std::ostringstream os;
  os << spec.label << ": slope " << v.slope << " [" << v.ci_low << ", " << v.ci_high
     << "], predicted bound exponent " << spec.predicted_exponent;
  v.message = os.str();
  return v;
}

double least_squares_slope(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size() || t.size() < 2) throw ConfigError("least_squares_slope: need >= 2 points");
  const double n = static_cast<double>(t.size());
  const double mt = std::accumulate(t.begin(), t.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    sxy += (t[i] - mt) * (y[i] - my);
    sxx += (t[i] - mt) * (t[i] - mt);
  }
  if (!(sxx > 0.0)) throw ConfigError("least_squares_slope: times must not all coincide");
  return sxy / sxx;
}

SlopeReport slope_regression(std::span<const double> times,
                             const std::vector<std::vector<double>>& paths) {
  SlopeReport r;
  r.slopes.reserve(paths.size());
  for (const auto& p : paths) r.slopes.push_back(least_squares_slope(times, p));
  r.summary = summarize(r.slopes);
  if (paths.size() < 100) {
    r.warnings.push_back("fewer than 100 replicas: the variance confidence interval is wide");
  }
  return r;
}

ConvergenceReport distributional_convergence_test(
    const std::vector<std::int64_t>& ladder, const std::vector<std::vector<double>>& finite_samples,
    std::span<const double> limit_sample, double finite_time, double limit_time,
    double p_threshold) {
  if (std::abs(finite_time - limit_time) > 1e-12) {
    throw ConfigError("distributional_convergence_test: observation times differ");
  }
  if (ladder.size() != finite_samples.size() || ladder.empty()) {
    throw ConfigError("distributional_convergence_test: one sample per ladder value");
  }
  ConvergenceReport r;
  r.ladder = ladder;
  for (const auto& s : finite_samples) {
    if (limit_sample.size() < 10 * s.size()) {
      throw ConfigError("distributional_convergence_test: limit sample must be >= 10x the finite-N sample");
    }
    r.ks.push_back(ks_two_sample(s, limit_sample));
  }
  r.non_increasing = true;
  for (std::size_t i = 1; i < r.ks.size(); ++i) {
    r.non_increasing = r.non_increasing && r.ks[i].statistic <= r.ks[i - 1].statistic;
  }
  r.passed = r.non_increasing && r.ks.back().p_value > p_threshold;
  return r;
}

}  // namespace meanfield::stats

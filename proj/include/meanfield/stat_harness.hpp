#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "meanfield/core.hpp"

namespace meanfield::stats {

// ---------------------------------------------------------------------------
// Exact stationary law of the small Curie-Weiss chain

struct GibbsOracleResult {
  std::size_t n = 0;
  std::vector<std::uint32_t> states;  ///< bit j set means spin j is +1
  std::vector<double> energies;       ///< H_N per configuration
  std::vector<double> probabilities;  ///< stationary vector of the generator
  std::vector<double> gibbs;          ///< exp(−H_N)/Z
  double generator_residual = 0.0;    ///< ‖πQ‖∞
  double detailed_balance_residual = 0.0;
  double gibbs_discrepancy = 0.0;     ///< ‖π − exp(−H)/Z‖∞

  static int spin(std::uint32_t state, std::size_t j) { return (state >> j) & 1u ? 1 : -1; }
};

/// H_N(σ) = −(β/2N)(Σσ_j)² − βΣη_jσ_j.
double cw_energy(std::uint32_t state, double beta, std::span<const double> fields);

/// Enumerates all 2^N configurations (N ≤ 12), builds the Glauber generator
/// with rates exp(−βσ_j(m_N + η_j)), solves πQ = 0 and checks detailed
/// balance entry-wise.
GibbsOracleResult exact_gibbs_oracle(double beta, std::span<const double> fields);

/// Per-atom counts of +1 spins; the sufficient statistic of the aggregated chain.
using CountClass = std::vector<std::int64_t>;

/// Pushes the configuration law forward to count classes. `field_index[j]`
/// is the atom of particle j.
std::map<CountClass, double> project_to_counts(const GibbsOracleResult& oracle,
                                               std::span<const std::size_t> field_index,
                                               std::size_t n_fields);

double total_variation(const std::map<CountClass, double>& p, const std::map<CountClass, double>& q);

// ---------------------------------------------------------------------------
// Classical tests

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;
};

/// Asymptotic Kolmogorov tail P(K > λ) = 2Σ(−1)^{k−1}e^{−2k²λ²}.
double kolmogorov_tail(double lambda);

/// Two-sided two-sample KS; both samples need at least 20 points.
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Pearson chi-square of counts against probabilities (normalized internally).
TestResult chi_square_gof(std::span<const double> observed, std::span<const double> expected_probs);

struct SampleSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double se_mean = 0.0;
  double se_variance = 0.0;
};

SampleSummary summarize(std::span<const double> x);

/// Unbiased covariance and its standard error from the spread of products.
struct CovarianceEstimate {
  double value = 0.0;
  double se = 0.0;
};
CovarianceEstimate covariance(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> x);
double quantile(std::vector<double> x, double q);

// ---------------------------------------------------------------------------
// Collapse, slope and distributional checks

struct CollapseTestSpec {
  std::string label;
  std::vector<std::int64_t> ladder;  ///< strictly increasing, geometric, ≥ 3 values
  double predicted_exponent = 0.0;
  double confidence = 0.95;
  std::size_t bootstrap_resamples = 2000;
  std::uint64_t seed = 0;
  std::size_t min_replicas = 100;
};

/// −(1/8)(1 − 2/d) for the disordered Curie-Weiss non-critical directions.
double cw_collapse_exponent(double d = 4.0);
/// 1/(2d) − 1/4 for the Kuramoto weighted norm.
double kuramoto_collapse_exponent(double d = 4.0);

struct CollapseVerdict {
  bool collapse = false;
  bool degenerate = false;       ///< observable identically zero
  bool strictly_decreasing = false;
  std::vector<double> medians;
  double slope = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double predicted_exponent = 0.0;
  std::string message;
};

/// `suprema[i]` holds one sup_t|observable| per replica at ladder[i].
CollapseVerdict collapse_test(const CollapseTestSpec& spec,
                              const std::vector<std::vector<double>>& suprema);

struct SlopeReport {
  std::vector<double> slopes;
  SampleSummary summary;
  std::vector<std::string> warnings;
};

/// Least-squares slope of each path over the given times.
double least_squares_slope(std::span<const double> t, std::span<const double> y);
SlopeReport slope_regression(std::span<const double> times,
                             const std::vector<std::vector<double>>& paths);

struct ConvergenceReport {
  std::vector<std::int64_t> ladder;
  std::vector<TestResult> ks;
  bool non_increasing = false;
  bool passed = false;
};

/// KS of each finite-N sample against the limit sample. Requires the same
/// observation time and a limit sample at least 10× each finite-N sample.
ConvergenceReport distributional_convergence_test(
    const std::vector<std::int64_t>& ladder, const std::vector<std::vector<double>>& finite_samples,
    std::span<const double> limit_sample, double finite_time, double limit_time,
    double p_threshold = 0.01);

}  // namespace meanfield::stats

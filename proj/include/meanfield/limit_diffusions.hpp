#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meanfield/core.hpp"

namespace meanfield::limits {

enum class LimitKind { kCwCubic1d, kCwRandomSlope, kKuramotoCubic2d, kLinearOu };
std::string to_string(LimitKind kind);

/// c(ω) = (1+4ω²)²(1−8ω²) / (4(1−4ω²)³(1+ω²)).
double kuramoto_cubic_coefficient(double omega);
/// √((1+4ω²)/2).
double kuramoto_cubic_noise(double omega);

struct LimitSdeSpec {
  LimitKind kind = LimitKind::kCwCubic1d;
  double drift_coefficient = 0.0;  ///< cubic kinds: dY = −coef·Y|Y|² dt + noise dW
  double noise = 0.0;
  double slope_variance = 0.0;     ///< random slope: Var ℋ
  double omega = 0.0;              ///< kuramoto kind only
  Eigen::MatrixXd ou_drift;        ///< linear OU: dX = A X dt + diag(noise) dW
  Eigen::VectorXd ou_noise;
  Eigen::MatrixXd ou_initial_covariance;

  /// dY = −(2/3)Y³ dt + 2 dW.
  static LimitSdeSpec cw_cubic_1d();
  /// Y(t) = 2ℋt with ℋ ~ N(0, ∫tanh²(βη)μ(dη)).
  static LimitSdeSpec cw_random_slope(double beta, const DisorderLaw& law);
  static LimitSdeSpec kuramoto_cubic_2d(double omega);
  static LimitSdeSpec linear_ou(Eigen::MatrixXd drift, Eigen::VectorXd noise,
                                Eigen::MatrixXd initial_covariance);

  std::size_t dimension() const;
  bool explosive() const { return kind == LimitKind::kKuramotoCubic2d && drift_coefficient < 0.0; }
};

struct StoppingRule {
  enum class Kind { kNone, kRadial };
  Kind kind = Kind::kNone;
  double radius = 0.0;  ///< threshold on V₁² + V₂²

  static StoppingRule none() { return {}; }
  static StoppingRule radial(double r);
};

struct LimitPath {
  std::vector<double> times;
  std::vector<std::vector<double>> values;
  std::optional<double> stopping_time;
  std::vector<double> final_value;
};

/// Euler–Maruyama for the cubic kinds (drift tamed as f/(1+dt‖f‖) unless the
/// regime is explosive), exact sampling for the random slope, EM for the OU
/// system. Cubic kinds require dt ≤ 1e-3. Stopped paths are frozen at the
/// first step with V₁² + V₂² ≥ radius. `record_every` = 0 keeps only the
/// final value.
LimitPath simulate_limit(const LimitSdeSpec& spec, double t_end, double dt, const SeedSpec& seed,
                         const StoppingRule& stopping = {}, std::size_t record_every = 0);

struct LimitEnsemble {
  std::vector<std::vector<double>> final_values;     ///< [path][component]
  std::vector<std::optional<double>> stopping_times;

  std::vector<double> component(std::size_t i) const;
  std::vector<double> radii() const;  ///< ‖(first two components)‖
  double stopped_fraction() const;
};

/// Independent paths keyed by seed.replica(path index).
LimitEnsemble simulate_limit_ensemble(const LimitSdeSpec& spec, double t_end, double dt,
                                      std::uint64_t base_seed, std::size_t n_paths,
                                      const StoppingRule& stopping = {}, unsigned threads = 0);

struct RadialMoments {
  double mean = 0.0;
  double variance = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
  std::size_t n_paths = 0;
  double stopped_fraction = 0.0;
};

/// Monte Carlo moments of ‖V(t ∧ T)‖² for the two-dimensional cubic limit.
RadialMoments radial_moments(double omega, double t, std::size_t n_paths, double dt,
                             std::uint64_t base_seed, const StoppingRule& stopping = {},
                             unsigned threads = 0);

/// Exact draws of ‖V‖ under the invariant density ∝ exp(−c‖v‖⁴/(2σ²)) of the
/// ergodic cubic limit: ‖V‖² is half-normal with scale σ/√c.
std::vector<double> cubic_invariant_radii(double omega, std::size_t n, const SeedSpec& seed);

}  // namespace meanfield::limits

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meanfield/core.hpp"

namespace meanfield::cw {

/// Macroscopic CW state: q(+1, η) and q(−1, η) per atom of μ.
struct CwProfile {
  std::vector<double> up;
  std::vector<double> down;

  static CwProfile from_plus(std::vector<double> q_plus);
  /// m_q = Σ_η (q(1,η) − q(−1,η)) μ(η).
  double magnetization(const DisorderLaw& law) const;
  /// max_η |q(1,η) + q(−1,η) − 1|.
  double normalization_error() const;
  double sup_distance(const CwProfile& other) const;
};

enum class Stability { kStable, kNeutral, kUnstable };
std::string to_string(Stability s);

struct CwStationaryState {
  double m_star = 0.0;
  CwProfile profile;
  Stability stability = Stability::kStable;
  double residual = 0.0;         ///< |F(m_*)|
  double criticality_gap = 0.0;  ///< β∫μ(dη)/cosh²(β(m_*+η)) − 1
};

struct StationaryScan {
  std::vector<CwStationaryState> states;  ///< sorted by m_star
  std::vector<std::string> warnings;
};

/// q_*(σ,η) = e^{βσ(m+η)} / (2cosh(β(m+η))).
CwProfile stationary_profile(double beta, const DisorderLaw& law, double m);
/// F(m) = ∫tanh(β(m+η))μ(dη) − m.
double self_consistency_residual(double beta, const DisorderLaw& law, double m);
/// β∫μ(dη)/cosh²(β(m+η)) − 1; negative means linearly stable.
double criticality_gap(double beta, const DisorderLaw& law, double m = 0.0);

struct CwOdeTrajectory {
  std::vector<double> times;
  std::vector<CwProfile> profiles;
};

/// Integrates dq/dt = ∇^σ[e^{−βσ(m_q+η)} q(σ,η)] by classical RK4.
/// Records every `record_every` steps plus the final state. Throws
/// StepSizeError when per-atom normalization drifts by more than 1e-6.
CwOdeTrajectory mckean_vlasov_cw(const CwProfile& q0, double beta, const DisorderLaw& law,
                                 double t_end, double dt = 1e-3, std::size_t record_every = 1);

/// Roots of F on a uniform grid of `grid_points` over [−1, 1], refined by
/// bisection to |F| < 1e-12. m = 0 is always present.
StationaryScan cw_stationary_states(double beta, const DisorderLaw& law,
                                    std::size_t grid_points = 10001);

/// Smallest β > 0 with β∫μ(dη)/cosh²(βη) = 1, or nullopt if none exists.
std::optional<double> critical_beta(const DisorderLaw& law);

struct SpectralDecompositionCw {
  std::vector<double> nu;     ///< ν(η) = μ(η)/cosh(β(m_*+η))
  Eigen::MatrixXd matrix;     ///< 𝔏 acting on values at atoms
  Eigen::VectorXd eigenvalues;             ///< ascending
  std::vector<std::vector<double>> basis;  ///< φ_i at atoms, ν-orthonormal

  double nu_inner(const std::vector<double>& f, const std::vector<double>& g) const;
  std::vector<double> apply(const std::vector<double>& phi) const;
};

/// Assembles 𝔏φ(η) = cosh(β(m_*+η))φ(η) − β∫φ/cosh(β(m_*+·))dμ and
/// diagonalizes it in L²(ν).
SpectralDecompositionCw linearized_cw(double beta, const DisorderLaw& law, double m_star);

/// Gaussian limit of the normal fluctuations X_i = ∫σφ_i dρ̂_N:
///   dX_i = 2(ℋ_i − λ_i X_i) dt + b_i dW_i,  b_i = 2(∫φ_i² dν)^{1/2}.
struct CwCltParameters {
  Eigen::MatrixXd cov_x0;
  Eigen::MatrixXd cov_h;
  Eigen::MatrixXd cov_hx0;  ///< (i,j) = Cov(ℋ_i, X_j(0))
  Eigen::VectorXd noise;    ///< b_i
  Eigen::VectorXd eigenvalues;
  Eigen::VectorXd drift_rates;  ///< 2λ_i

  /// Var X_i(t) for the linear SDE above.
  double predicted_variance(std::size_t i, double t) const;
};

/// Computes the three covariance sums for an arbitrary basis (values at
/// atoms); `basis` defaults to the eigenbasis of `spec`.
CwCltParameters cw_clt_parameters(const SpectralDecompositionCw& spec, double beta,
                                  const DisorderLaw& law, double m_star);
CwCltParameters cw_clt_parameters(const SpectralDecompositionCw& spec, double beta,
                                  const DisorderLaw& law, double m_star,
                                  const std::vector<std::vector<double>>& basis);

}  // namespace meanfield::cw

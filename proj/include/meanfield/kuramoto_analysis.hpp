#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "meanfield/core.hpp"

namespace meanfield::kuramoto {

struct CriticalCoupling {
  double theta_c = 1.0;    ///< [∫μ(dη)/(1+4ω²η²)]^{-1}
  double effective = 1.0;  ///< min(θ_c, 2) for the ±1 frequency law, θ_c otherwise
  bool capped = false;     ///< true when the bound 2 is the binding branch
};

CriticalCoupling theta_critical(double omega, const DisorderLaw& law);

/// Stationary density with order parameter r (phase 0) on a uniform grid
/// x_i = 2πi/n, i < n.
struct KuramotoStationaryState {
  double r_star = 0.0;
  std::vector<double> grid;
  std::vector<std::vector<double>> density;  ///< [atom][i]
  std::vector<double> z_star;                ///< per-atom normalizer
  double coherence = 0.0;  ///< ∫∫cos x q dx dμ evaluated at this r
  double residual = 0.0;   ///< |coherence − r|

  double normalization_error() const;
};

/// Evaluates the stationary density of the mean-field equation for a given
/// r by composite Simpson for the cumulative inner integral and periodic
/// trapezoid for the normalizer. Throws ConfigError for grids below 512
/// points and when doubling the grid moves the coherence by more than 1e-6.
KuramotoStationaryState kuramoto_stationary(double r, double theta, double omega,
                                            const DisorderLaw& law,
                                            std::size_t grid_points = 2048);

/// r ↦ ∫∫cos x q_r(x,η) dx μ(dη) without the convergence check.
double coherence_map(double r, double theta, double omega, const DisorderLaw& law,
                     std::size_t grid_points = 2048);

/// Fixed points of the coherence map on [0, 1], 0 first, refined to 1e-10.
std::vector<double> solve_r_star(double theta, double omega, const DisorderLaw& law,
                                 std::size_t grid_points = 2048, std::size_t scan_points = 400);

/// Fourier coefficients c_h(η), h = 0..K, of a real density on the torus;
/// c_{-h} = conj(c_h) is implied.
struct KuramotoDensity {
  std::size_t K = 0;
  std::vector<std::vector<std::complex<double>>> coeffs;  ///< [atom][h]

  static KuramotoDensity uniform(std::size_t n_atoms, std::size_t K);
  /// Projects q(x, atom index) onto the first K harmonics with an n-point rule.
  template <class F>
  static KuramotoDensity from_function(F&& q, std::size_t n_atoms, std::size_t K,
                                       std::size_t quadrature = 1024);

  double value(std::size_t atom, double x) const;
  /// Minimum of the reconstructed density over a uniform grid.
  double min_value(std::size_t grid = 512) const;
  /// Σ_η μ(η) c_1(η).
  std::complex<double> first_harmonic_total(const DisorderLaw& law) const;
  /// Copy with K' harmonics (zero-padded or truncated).
  KuramotoDensity resized(std::size_t K_new) const;
  double max_abs_difference(const KuramotoDensity& other) const;
};

struct KuramotoOdeTrajectory {
  std::vector<double> times;
  std::vector<KuramotoDensity> densities;
};

/// Galerkin RK4 for the mean-field equation in Fourier coefficients:
///   ċ_h = −½h²c_h − ihωη c_h + hθπ(c₁ᵗᵒᵗ c_{h−1} − conj(c₁ᵗᵒᵗ) c_{h+1}),
/// c_0 = 1/(2π), c_{K+1} = 0. With `check_truncation` the run is repeated at
/// 2K and StructuralError is thrown if the shared harmonics differ by > 1e-6.
KuramotoOdeTrajectory mckean_vlasov_kuramoto(const KuramotoDensity& q0, double theta,
                                             double omega, const DisorderLaw& law, double t_end,
                                             double dt = 1e-3, std::size_t record_every = 1,
                                             bool check_truncation = true);

/// Right-hand side of the Galerkin system, exposed for Jacobian checks.
KuramotoDensity galerkin_rhs(const KuramotoDensity& q, double theta, double omega,
                             const DisorderLaw& law);

/// Linearization around the uniform density on span{e^{ihx} 1_{η=a}}, 1 ≤ |h| ≤ K.
/// Unknowns are ordered by h = 1..K, then h = −1..−K, atoms innermost.
struct SpectralDecompositionK {
  std::size_t K = 0;
  std::size_t n_atoms = 0;
  Eigen::MatrixXcd matrix;
  Eigen::VectorXcd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
  std::vector<std::complex<double>> reference;  ///< closed-form spectrum, empty when unavailable

  std::size_t index(int h, std::size_t atom) const;
  /// Number of eigenvalues with |λ| < tol.
  std::size_t kernel_dimension(double tol = 1e-8) const;
  /// ‖𝔏v‖∞ for v_1^(1) ± i v_1^(2) = e^{±ix}(1 ± 2iωη).
  double kernel_residual(double omega, const DisorderLaw& law) const;
  double max_real_part() const;
};

/// Block for a single harmonic h ≠ 0:
///   (−h²/2 + iωη_a h)δ_ab + [|h| = 1](θ/2)μ_b.
Eigen::MatrixXcd linearized_block(int h, double theta, double omega, const DisorderLaw& law);

SpectralDecompositionK linearized_kuramoto(double theta, double omega, const DisorderLaw& law,
                                           std::size_t K = 32);

/// {0, −½+2ω², −h²/2 ± ihω for 2 ≤ h ≤ K}, each twice, at θ = 1+4ω² and ±1 frequencies.
std::vector<std::complex<double>> analytic_spectrum(double omega, std::size_t K);

/// Gaussian fluctuation limit of (∫cos hx, ∫sin hx, ∫η cos hx, ∫η sin hx)dρ̂_N
/// under ±1 frequencies and uniform start.
struct KuramotoCltSystem {
  double theta = 1.0;
  double omega = 0.0;
  std::size_t h_max = 0;
  std::vector<Eigen::Matrix4d> drift;  ///< [h − 1]
  std::vector<double> noise;           ///< [h − 1], per component

  const Eigen::Matrix4d& block(std::size_t h) const { return drift.at(h - 1); }
  double noise_amplitude(std::size_t h) const { return noise.at(h - 1); }
  static Eigen::Matrix4d initial_covariance() { return 0.5 * Eigen::Matrix4d::Identity(); }
  /// Solves A Σ + Σ Aᵀ + σ²I = 0; throws StructuralError if the block is not stable.
  Eigen::Matrix4d stationary_covariance(std::size_t h) const;
  /// Σ(t) = e^{At} Σ(0) e^{Aᵀt} + ∫₀ᵗ e^{As} σ² e^{Aᵀs} ds.
  Eigen::Matrix4d covariance_at(std::size_t h, double t) const;
};

KuramotoCltSystem kuramoto_clt_system(double theta, double omega, std::size_t h_max);

template <class F>
KuramotoDensity KuramotoDensity::from_function(F&& q, std::size_t n_atoms, std::size_t K,
                                               std::size_t quadrature) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  KuramotoDensity d;
  d.K = K;
  d.coeffs.assign(n_atoms, std::vector<std::complex<double>>(K + 1));
  const double dx = two_pi / static_cast<double>(quadrature);
  for (std::size_t a = 0; a < n_atoms; ++a) {
    for (std::size_t i = 0; i < quadrature; ++i) {
      const double x = dx * static_cast<double>(i);
      const double v = q(x, a);
      for (std::size_t h = 0; h <= K; ++h) {
        d.coeffs[a][h] += v * std::polar(1.0, -static_cast<double>(h) * x);
      }
    }
    for (auto& c : d.coeffs[a]) c *= dx / two_pi;
  }
  return d;
}

}  // namespace meanfield::kuramoto

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "meanfield/core.hpp"

namespace meanfield::kuramoto {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Rotator angles in [0, 2π) and their frozen frequencies η_j.
struct RotatorState {
  std::vector<double> angles;
  std::vector<double> eta;
  double time = 0.0;
  std::int64_t steps = 0;

  std::int64_t size() const { return static_cast<std::int64_t>(angles.size()); }
};

struct OrderParameterSample {
  double r = 0.0;
  double psi = 0.0;  ///< in [0, 2π)
};

/// r e^{iψ} = (1/N) Σ_j e^{i x_j}.
OrderParameterSample order_parameter(const RotatorState& state);

double wrap_angle(double x);

/// Per-atom initial density q0(x, η) on [0, 2π); need not be normalized.
using AngleDensity = std::function<double(double x, double eta)>;

AngleDensity uniform_density();

/// Frequencies i.i.d. from the law, then angles by inverse CDF of q0(·, η)
/// tabulated on a 2048-point grid.
RotatorState initial_kuramoto_state(const KuramotoParams& params, const AngleDensity& q0,
                                    const SeedSpec& seed);

/// One Euler–Maruyama step
///   x_j += [ωη_j + θ(S cos x_j − C sin x_j)] dt + √dt ξ_j,
/// with C, S the mean cosine and sine. `noise` holds the N standard normal
/// increments ξ_j. O(N).
void step_kuramoto(RotatorState& state, const KuramotoParams& params, double dt,
                   std::span<const double> noise);

/// Same step with the coupling evaluated as (θ/N)Σ_k sin(x_k − x_j). O(N²);
/// a reference for the mean-field reduction.
void step_kuramoto_pairwise(RotatorState& state, const KuramotoParams& params, double dt,
                            std::span<const double> noise);

/// Owns the noise stream of one run. `noise_scale` = 0 gives the deterministic
/// drift flow.
class KuramotoIntegrator {
 public:
  KuramotoIntegrator(KuramotoParams params, double dt, const SeedSpec& seed);

  void step(RotatorState& state);
  /// Advances `n_steps`, calling `observer` after every `observe_every` steps
  /// (and once before the first step when `observe_initial`).
  void advance(RotatorState& state, std::int64_t n_steps,
               const std::function<void(const RotatorState&)>& observer = {},
               std::int64_t observe_every = 1, bool observe_initial = false);

  double dt() const { return dt_; }
  double noise_scale = 1.0;

 private:
  KuramotoParams params_;
  double dt_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::vector<double> noise_;
};

/// (1/N) Σ_j of cos hx_j, sin hx_j, η_j cos hx_j and η_j sin hx_j for h = 1..h_max.
struct HarmonicSums {
  std::size_t h_max = 0;
  std::vector<double> cos_sum;
  std::vector<double> sin_sum;
  std::vector<double> eta_cos_sum;
  std::vector<double> eta_sin_sum;

  double cos_h(std::size_t h) const { return cos_sum[h - 1]; }
  double sin_h(std::size_t h) const { return sin_sum[h - 1]; }
  double eta_cos_h(std::size_t h) const { return eta_cos_sum[h - 1]; }
  double eta_sin_h(std::size_t h) const { return eta_sin_sum[h - 1]; }
};

HarmonicSums harmonic_sums(const RotatorState& state, std::size_t h_max);

struct ObservableConfig {
  double omega = 0.0;
  std::size_t h_max = 16;
  double r = 2.0;  ///< weight exponent of the norm
  SpaceScale space_scale = SpaceScale::kModerate;
  TimeScale time_scale = TimeScale::kNHalf;
};

/// Column labels: V1_1..V1_4, then Y{h}_{i} for h = 2..h_max and i = 1..4,
/// then norm2_r and norm2_tail_bound.
std::vector<std::string> kuramoto_labels(std::size_t h_max);

/// One row of rescaled observables against the uniform reference density.
/// The tail bound is a deterministic bound on the weighted terms with h > h_max.
std::vector<double> kuramoto_order_parameter_row(const RotatorState& state,
                                                 const ObservableConfig& config);

FluctuationSeries kuramoto_order_parameters(std::span<const RotatorState> snapshots,
                                            const ObservableConfig& config);

}  // namespace meanfield::kuramoto

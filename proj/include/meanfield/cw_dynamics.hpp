#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "meanfield/core.hpp"

namespace meanfield::cw {

/// State index used in cell tables: 0 ↔ spin −1, 1 ↔ spin +1.
inline constexpr std::size_t state_index(int spin) { return spin > 0 ? 1 : 0; }
inline constexpr int spin_of(std::size_t state) { return state == 1 ? 1 : -1; }

/// Occupation counts |A(j,k)| of the 2·|supp μ| (spin, field) cells. The
/// magnetization is carried as the exact integer Σ j·counts(j,k).
struct AggregatedCwState {
  std::vector<std::int64_t> up;    ///< counts(+1, k)
  std::vector<std::int64_t> down;  ///< counts(−1, k)
  std::int64_t n = 0;
  std::int64_t spin_sum = 0;
  double time = 0.0;

  double magnetization() const { return static_cast<double>(spin_sum) / static_cast<double>(n); }
  std::int64_t count(int spin, std::size_t field) const { return spin > 0 ? up[field] : down[field]; }
  std::size_t n_fields() const { return up.size(); }

  /// Builds a state from explicit per-particle spins and field-atom indices.
  static AggregatedCwState from_particles(std::span<const int> spins,
                                          std::span<const std::size_t> fields,
                                          std::size_t n_fields);
  /// Throws InternalError on a broken count/magnetization invariant.
  void check_invariants() const;
  EmpiricalMeasure to_empirical() const;
  bool same_counts(const AggregatedCwState& other) const {
    return up == other.up && down == other.down;
  }
};

struct CwEvent {
  double time;
  int spin;           ///< spin value before the flip
  std::size_t field;  ///< atom index
};

struct CwTrajectory {
  std::vector<AggregatedCwState> snapshots;  ///< pre-jump states at grid times
  std::vector<CwEvent> events;               ///< only when recording was requested
  std::int64_t n_events = 0;
  AggregatedCwState final_state;
};

struct CwSimulationOptions {
  bool record_events = false;
  /// Invoked once per sojourn with the state and the time spent in it
  /// (truncated at t_end). Used for occupation measures.
  std::function<void(const AggregatedCwState&, double)> on_sojourn;
};

/// Fields i.i.d. from μ, then spin +1 with probability q0_plus[k] given field k.
AggregatedCwState initial_cw_state(const CwParams& params, std::span<const double> q0_plus,
                                   const SeedSpec& seed);

/// Total flip intensity of each cell: counts(j,k)·exp(−β j (m_N + k)).
/// Returned as a CellTable with state index per state_index().
CellTable cell_rates(const AggregatedCwState& state, const CwParams& params);

/// Exact Gillespie simulation over the aggregated channels, in microscopic
/// time. `grid` must be sorted within [0, t_end].
CwTrajectory simulate_cw(const AggregatedCwState& state, const CwParams& params, double t_end,
                         std::span<const double> grid, const SeedSpec& seed,
                         const CwSimulationOptions& options = {});

/// Y_i = scale·√N Σ_{j,k} φ_i(k)[j·counts(j,k)/N − j·q_*(j,k)μ(k)] at every
/// snapshot. `basis[i][k]` is φ_i at atom k; `q_star_plus[k]` = q_*(+1, k).
/// Snapshot times are divided by the time factor of `time_scale`.
FluctuationSeries cw_order_parameters(const CwTrajectory& traj, const DisorderLaw& law,
                                      const std::vector<std::vector<double>>& basis,
                                      std::span<const double> q_star_plus,
                                      SpaceScale space_scale, TimeScale time_scale,
                                      std::vector<std::string> labels = {});

/// Single-snapshot form of cw_order_parameters (no time column).
std::vector<double> cw_order_parameter_row(const AggregatedCwState& state, const DisorderLaw& law,
                                           const std::vector<std::vector<double>>& basis,
                                           std::span<const double> q_star_plus,
                                           SpaceScale space_scale);

}  // namespace meanfield::cw

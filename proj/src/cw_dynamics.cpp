#include "meanfield/cw_dynamics.hpp"

#include <cmath>
#include <random>

namespace meanfield::cw {

AggregatedCwState AggregatedCwState::from_particles(std::span<const int> spins,
                                                    std::span<const std::size_t> fields,
                                                    std::size_t n_fields) {
  if (spins.size() != fields.size() || spins.empty()) {
    throw StructuralError("cw state: spins and fields must have equal, nonzero length");
  }
  AggregatedCwState s;
  s.up.assign(n_fields, 0);
  s.down.assign(n_fields, 0);
  for (std::size_t i = 0; i < spins.size(); ++i) {
    if (fields[i] >= n_fields) throw StructuralError("cw state: field index out of range");
    if (spins[i] > 0) {
      ++s.up[fields[i]];
      ++s.spin_sum;
    } else {
      ++s.down[fields[i]];
      --s.spin_sum;
    }
  }
  s.n = static_cast<std::int64_t>(spins.size());
  return s;
}

void AggregatedCwState::check_invariants() const {
  if (up.size() != down.size()) throw InternalError("cw state: ragged cell arrays");
  std::int64_t total = 0;
  std::int64_t sum = 0;
  for (std::size_t k = 0; k < up.size(); ++k) {
    if (up[k] < 0 || down[k] < 0) throw InternalError("cw state: negative count");
    total += up[k] + down[k];
    sum += up[k] - down[k];
  }
  if (total != n) throw InternalError("cw state: counts do not sum to N");
  if (sum != spin_sum) throw InternalError("cw state: cached magnetization out of sync");
}

EmpiricalMeasure AggregatedCwState::to_empirical() const {
  EmpiricalMeasure m;
  m.n_states = 2;
  m.n_fields = up.size();
  m.counts.resize(2 * up.size());
  for (std::size_t k = 0; k < up.size(); ++k) {
    m.counts[state_index(-1) * m.n_fields + k] = down[k];
    m.counts[state_index(+1) * m.n_fields + k] = up[k];
  }
  return m;
}

AggregatedCwState initial_cw_state(const CwParams& params, std::span<const double> q0_plus,
                                   const SeedSpec& seed) {
  params.validate();
  if (q0_plus.size() != params.law.size()) {
    throw ConfigError("cw initial state: q0 must give one probability per atom");
  }
  for (double p : q0_plus) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("cw initial state: q0(+1|eta) outside [0,1]");
  }
  const auto n = static_cast<std::size_t>(params.n_particles);
  const auto fields = sample_disorder_indices(params.law, n, seed);
  auto rng = seed.engine(streams::kInitialState);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  AggregatedCwState s;
  s.up.assign(params.law.size(), 0);
  s.down.assign(params.law.size(), 0);
  s.n = params.n_particles;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = fields[i];
    if (unif(rng) < q0_plus[k]) {
      ++s.up[k];
      ++s.spin_sum;
    } else {
      ++s.down[k];
      --s.spin_sum;
    }
  }
  return s;
}

CellTable cell_rates(const AggregatedCwState& state, const CwParams& params) {
  if (state.n_fields() != params.law.size()) {
    throw StructuralError("cell_rates: state and law have different supports");
  }
  const double m = state.magnetization();
  CellTable out(2, state.n_fields());
  for (std::size_t k = 0; k < state.n_fields(); ++k) {
    const double eta = params.law.value(k);
    out.at(state_index(+1), k) =
        static_cast<double>(state.up[k]) * std::exp(-params.beta * (m + eta));
    out.at(state_index(-1), k) =
        static_cast<double>(state.down[k]) * std::exp(params.beta * (m + eta));
  }
  return out;
}

CwTrajectory simulate_cw(const AggregatedCwState& initial, const CwParams& params, double t_end,
                         std::span<const double> grid, const SeedSpec& seed,
                         const CwSimulationOptions& options) {
  params.validate();
  if (!(t_end > 0.0)) throw ConfigError("simulate_cw: t_end must be > 0");
  if (initial.n_fields() != params.law.size()) {
    throw StructuralError("simulate_cw: state and law have different supports");
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < initial.time || grid[i] > t_end || (i > 0 && grid[i] < grid[i - 1])) {
      throw ConfigError("simulate_cw: observation grid must be sorted within [t0, t_end]");
    }
  }

  const std::size_t m = initial.n_fields();
  const double beta = params.beta;
  const double inv_n = 1.0 / static_cast<double>(initial.n);
  // rate(+1,k) = up_k e^{-βm} e^{-βk},  rate(-1,k) = down_k e^{βm} e^{βk}
  std::vector<double> field_up(m);
  std::vector<double> field_down(m);
  for (std::size_t k = 0; k < m; ++k) {
    field_up[k] = std::exp(-beta * params.law.value(k));
    field_down[k] = 1.0 / field_up[k];
  }

  auto rng = seed.engine(streams::kDynamics);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  CwTrajectory traj;
  traj.snapshots.reserve(grid.size());
  AggregatedCwState s = initial;
  double t = s.time;
  std::size_t gi = 0;
  std::vector<double> rates(2 * m);

  for (;;) {
    const double em = std::exp(-beta * static_cast<double>(s.spin_sum) * inv_n);
    const double ep = 1.0 / em;
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      rates[2 * k] = static_cast<double>(s.up[k]) * em * field_up[k];
      rates[2 * k + 1] = static_cast<double>(s.down[k]) * ep * field_down[k];
      total += rates[2 * k] + rates[2 * k + 1];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw InternalError("simulate_cw: total jump rate is not positive and finite");
    }
    // 1 - U lies in (0, 1], so the waiting time is finite.
    const double wait = -std::log(1.0 - unif(rng)) / total;
    const double t_next = t + wait;
    while (gi < grid.size() && grid[gi] < t_next) {
      AggregatedCwState snap = s;
      snap.time = grid[gi];
      traj.snapshots.push_back(std::move(snap));
      ++gi;
    }
    if (t_next > t_end) {
      if (options.on_sojourn) options.on_sojourn(s, t_end - t);
      break;
    }
    if (options.on_sojourn) options.on_sojourn(s, wait);

    double target = unif(rng) * total;
    std::size_t channel = 0;
    for (; channel + 1 < rates.size(); ++channel) {
      if (target < rates[channel]) break;
      target -= rates[channel];
    }
    // guard against rounding landing on an empty channel
    while (rates[channel] <= 0.0) channel = (channel == 0) ? rates.size() - 1 : channel - 1;

    const std::size_t k = channel / 2;
    const bool from_up = (channel % 2) == 0;
    if (from_up) {
      --s.up[k];
      ++s.down[k];
      s.spin_sum -= 2;
    } else {
      --s.down[k];
      ++s.up[k];
      s.spin_sum += 2;
    }
    t = t_next;
    s.time = t;
    ++traj.n_events;
    if (options.record_events) traj.events.push_back({t, from_up ? +1 : -1, k});
  }
  while (gi < grid.size()) {
    AggregatedCwState snap = s;
    snap.time = grid[gi];
    traj.snapshots.push_back(std::move(snap));
    ++gi;
  }
  s.time = t_end;
  traj.final_state = std::move(s);
  return traj;
}

std::vector<double> cw_order_parameter_row(const AggregatedCwState& state, const DisorderLaw& law,
                                           const std::vector<std::vector<double>>& basis,
                                           std::span<const double> q_star_plus,
                                           SpaceScale space_scale) {
  const std::size_t m = law.size();
  if (state.n_fields() != m || q_star_plus.size() != m) {
    throw StructuralError("cw order parameters: state/reference/law supports differ");
  }
  const double factor = space_factor(space_scale, state.n);
  const double inv_n = 1.0 / static_cast<double>(state.n);
  // per-atom signed deviation Σ_j j[counts(j,k)/N − q_*(j,k)μ(k)]
  std::vector<double> dev(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double empirical = static_cast<double>(state.up[k] - state.down[k]) * inv_n;
    const double reference = (2.0 * q_star_plus[k] - 1.0) * law.weight(k);
    dev[k] = empirical - reference;
  }
  std::vector<double> row(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i].size() != m) {
      throw StructuralError("cw order parameters: basis function has wrong support size");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) acc += basis[i][k] * dev[k];
    row[i] = factor * acc;
  }
  return row;
}

FluctuationSeries cw_order_parameters(const CwTrajectory& traj, const DisorderLaw& law,
                                      const std::vector<std::vector<double>>& basis,
                                      std::span<const double> q_star_plus,
                                      SpaceScale space_scale, TimeScale time_scale,
                                      std::vector<std::string> labels) {
  if (labels.empty()) {
    for (std::size_t i = 0; i < basis.size(); ++i) labels.push_back("Y" + std::to_string(i));
  }
  if (labels.size() != basis.size()) throw StructuralError("cw order parameters: label count");
  FluctuationSeries series;
  series.space_scale = space_scale;
  series.time_scale = time_scale;
  series.labels = std::move(labels);
  for (const auto& snap : traj.snapshots) {
    const double tf = time_factor(time_scale, snap.n);
    series.append(snap.time / tf,
                  cw_order_parameter_row(snap, law, basis, q_star_plus, space_scale));
  }
  return series;
}

}  // namespace meanfield::cw

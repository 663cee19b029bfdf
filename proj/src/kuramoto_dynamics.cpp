#include "meanfield/kuramoto_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace meanfield::kuramoto {

double wrap_angle(double x) {
  double y = x - kTwoPi * std::floor(x / kTwoPi);
  if (y >= kTwoPi) y -= kTwoPi;
  if (y < 0.0) y = 0.0;
  return y;
}

OrderParameterSample order_parameter(const RotatorState& state) {
  double c = 0.0;
  double s = 0.0;
  for (double x : state.angles) {
    c += std::cos(x);
    s += std::sin(x);
  }
  const double n = static_cast<double>(state.angles.size());
  c /= n;
  s /= n;
  OrderParameterSample out;
  out.r = std::min(1.0, std::hypot(c, s));
  out.psi = wrap_angle(std::atan2(s, c));
  return out;
}

AngleDensity uniform_density() {
  return [](double, double) { return 1.0 / kTwoPi; };
}

namespace {

constexpr std::size_t kInverseCdfGrid = 2048;

struct InverseCdf {
  std::vector<double> cdf;  // size grid+1, cdf.front() = 0, cdf.back() = 1

  double operator()(double u) const {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = static_cast<std::size_t>(std::distance(cdf.begin(), it));
    i = std::clamp<std::size_t>(i, 1, cdf.size() - 1) - 1;
    const double h = kTwoPi / static_cast<double>(cdf.size() - 1);
    const double lo = cdf[i];
    const double hi = cdf[i + 1];
    const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.5;
    return wrap_angle(h * (static_cast<double>(i) + std::clamp(frac, 0.0, 1.0)));
  }
};

InverseCdf tabulate(const AngleDensity& q0, double eta) {
  const std::size_t n = kInverseCdfGrid;
  const double h = kTwoPi / static_cast<double>(n);
  std::vector<double> f(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    f[i] = q0(h * static_cast<double>(i), eta);
    if (!std::isfinite(f[i]) || f[i] < 0.0) {
      throw ConfigError("initial density must be finite and nonnegative");
    }
  }
  InverseCdf inv;
  inv.cdf.resize(n + 1);
  inv.cdf[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) inv.cdf[i + 1] = inv.cdf[i] + 0.5 * h * (f[i] + f[i + 1]);
  const double total = inv.cdf.back();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw ConfigError("initial density is not normalizable");
  }
  for (auto& c : inv.cdf) c /= total;
  inv.cdf.back() = 1.0;
  return inv;
}

}  // namespace

RotatorState initial_kuramoto_state(const KuramotoParams& params, const AngleDensity& q0,
                                    const SeedSpec& seed) {
  params.validate();
  const auto n = static_cast<std::size_t>(params.n_particles);
  const auto fields = sample_disorder_indices(params.law, n, seed);
  std::vector<InverseCdf> tables;
  tables.reserve(params.law.size());
  for (std::size_t k = 0; k < params.law.size(); ++k) tables.push_back(tabulate(q0, params.law.value(k)));

  auto rng = seed.engine(streams::kInitialState);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RotatorState s;
  s.angles.resize(n);
  s.eta.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    s.eta[j] = params.law.value(fields[j]);
    s.angles[j] = tables[fields[j]](unif(rng));
  }
  return s;
}

void step_kuramoto(RotatorState& state, const KuramotoParams& params, double dt,
                   std::span<const double> noise) {
  const std::size_t n = state.angles.size();
  if (noise.size() != n) throw StructuralError("step_kuramoto: one noise increment per rotator");
  std::vector<double> cs(n);
  std::vector<double> sn(n);
  double c = 0.0;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    cs[j] = std::cos(state.angles[j]);
    sn[j] = std::sin(state.angles[j]);
    c += cs[j];
    s += sn[j];
  }
  c /= static_cast<double>(n);
  s /= static_cast<double>(n);
  // θ r sin(ψ − x) = θ(S cos x − C sin x)
  const double sq = std::sqrt(dt);
  for (std::size_t j = 0; j < n; ++j) {
    const double drift = params.omega * state.eta[j] + params.theta * (s * cs[j] - c * sn[j]);
    state.angles[j] = wrap_angle(state.angles[j] + drift * dt + sq * noise[j]);
  }
  state.time += dt;
  ++state.steps;
}

void step_kuramoto_pairwise(RotatorState& state, const KuramotoParams& params, double dt,
                            std::span<const double> noise) {
  const std::size_t n = state.angles.size();
  if (noise.size() != n) throw StructuralError("step_kuramoto: one noise increment per rotator");
  const std::vector<double> x = state.angles;
  const double sq = std::sqrt(dt);
  for (std::size_t j = 0; j < n; ++j) {
    double coupling = 0.0;
    for (std::size_t k = 0; k < n; ++k) coupling += std::sin(x[k] - x[j]);
    coupling *= params.theta / static_cast<double>(n);
    const double drift = params.omega * state.eta[j] + coupling;
    state.angles[j] = wrap_angle(x[j] + drift * dt + sq * noise[j]);
  }
  state.time += dt;
  ++state.steps;
}

KuramotoIntegrator::KuramotoIntegrator(KuramotoParams params, double dt, const SeedSpec& seed)
    : params_(std::move(params)), dt_(dt), rng_(seed.engine(streams::kDynamics)) {
  params_.validate();
  if (!(dt > 0.0)) throw ConfigError("kuramoto integrator: dt must be > 0");
}

void KuramotoIntegrator::step(RotatorState& state) {
  noise_.resize(state.angles.size());
  for (auto& z : noise_) z = noise_scale * normal_(rng_);
  step_kuramoto(state, params_, dt_, noise_);
}

void KuramotoIntegrator::advance(RotatorState& state, std::int64_t n_steps,
                                 const std::function<void(const RotatorState&)>& observer,
                                 std::int64_t observe_every, bool observe_initial) {
  observe_every = std::max<std::int64_t>(observe_every, 1);
  if (observer && observe_initial) observer(state);
  for (std::int64_t i = 1; i <= n_steps; ++i) {
    step(state);
    if (observer && i % observe_every == 0) observer(state);
  }
}

HarmonicSums harmonic_sums(const RotatorState& state, std::size_t h_max) {
  HarmonicSums out;
  out.h_max = h_max;
  out.cos_sum.assign(h_max, 0.0);
  out.sin_sum.assign(h_max, 0.0);
  out.eta_cos_sum.assign(h_max, 0.0);
  out.eta_sin_sum.assign(h_max, 0.0);
  for (std::size_t j = 0; j < state.angles.size(); ++j) {
    const std::complex<double> z(std::cos(state.angles[j]), std::sin(state.angles[j]));
    std::complex<double> w = z;
    const double eta = state.eta[j];
    for (std::size_t h = 0; h < h_max; ++h) {
      out.cos_sum[h] += w.real();
      out.sin_sum[h] += w.imag();
      out.eta_cos_sum[h] += eta * w.real();
      out.eta_sin_sum[h] += eta * w.imag();
      w *= z;
    }
  }
  const double inv = 1.0 / static_cast<double>(state.angles.size());
  for (std::size_t h = 0; h < h_max; ++h) {
    out.cos_sum[h] *= inv;
    out.sin_sum[h] *= inv;
    out.eta_cos_sum[h] *= inv;
    out.eta_sin_sum[h] *= inv;
  }
  return out;
}

std::vector<std::string> kuramoto_labels(std::size_t h_max) {
  std::vector<std::string> labels{"V1_1", "V1_2", "V1_3", "V1_4"};
  for (std::size_t h = 2; h <= h_max; ++h) {
    for (int i = 1; i <= 4; ++i) labels.push_back("Y" + std::to_string(h) + "_" + std::to_string(i));
  }
  labels.emplace_back("norm2_r");
  labels.emplace_back("norm2_tail_bound");
  return labels;
}

std::vector<double> kuramoto_order_parameter_row(const RotatorState& state,
                                                 const ObservableConfig& config) {
  if (config.h_max < 2) throw ConfigError("h_max must be >= 2 for the weighted norm");
  if (state.angles.empty()) throw StructuralError("kuramoto order parameters: empty state");
  const HarmonicSums hs = harmonic_sums(state, config.h_max);
  const double f = space_factor(config.space_scale, state.size());
  const double w = 2.0 * config.omega;
  std::vector<double> row;
  row.reserve(4 * config.h_max + 2);
  row.push_back(f * (hs.cos_h(1) - w * hs.eta_sin_h(1)));
  row.push_back(f * (hs.sin_h(1) + w * hs.eta_cos_h(1)));
  row.push_back(f * (hs.eta_cos_h(1) + w * hs.sin_h(1)));
  row.push_back(f * (w * hs.cos_h(1) - hs.eta_sin_h(1)));
  double norm2 = row[2] * row[2] + row[3] * row[3];
  for (std::size_t h = 2; h <= config.h_max; ++h) {
    const double weight = std::pow(1.0 + static_cast<double>(h * h), -config.r);
    const double y[4] = {f * hs.cos_h(h), f * hs.sin_h(h), f * hs.eta_cos_h(h), f * hs.eta_sin_h(h)};
    for (double v : y) {
      row.push_back(v);
      norm2 += weight * v * v;
    }
  }
  row.push_back(norm2);
  double eta_max = 1.0;
  for (double e : state.eta) eta_max = std::max(eta_max, std::abs(e));
  // |Y_h^(i)| <= f·max(1, |η|), and Σ_{h > H} (1+h²)^{-r} <= H^{1-2r}/(2r-1)
  const double tail = 4.0 * f * f * eta_max * eta_max *
                      std::pow(static_cast<double>(config.h_max), 1.0 - 2.0 * config.r) /
                      (2.0 * config.r - 1.0);
  row.push_back(tail);
  return row;
}

FluctuationSeries kuramoto_order_parameters(std::span<const RotatorState> snapshots,
                                            const ObservableConfig& config) {
  FluctuationSeries series;
  series.space_scale = config.space_scale;
  series.time_scale = config.time_scale;
  series.labels = kuramoto_labels(config.h_max);
  for (const auto& s : snapshots) {
    series.append(s.time / time_factor(config.time_scale, s.size()),
                  kuramoto_order_parameter_row(s, config));
  }
  return series;
}

}  // namespace meanfield::kuramoto

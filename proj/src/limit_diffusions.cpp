#include "meanfield/limit_diffusions.hpp"

#include <cmath>
#include <random>

#include "meanfield/parallel.hpp"

namespace meanfield::limits {

std::string to_string(LimitKind kind) {
  switch (kind) {
    case LimitKind::kCwCubic1d:
      return "cw_cubic_1d";
    case LimitKind::kCwRandomSlope:
      return "cw_random_slope";
    case LimitKind::kKuramotoCubic2d:
      return "kuramoto_cubic_2d";
    case LimitKind::kLinearOu:
      return "linear_ou_system";
  }
  return "unknown";
}

double kuramoto_cubic_coefficient(double omega) {
  const double w2 = omega * omega;
  const double a = 1.0 + 4.0 * w2;
  const double b = 1.0 - 4.0 * w2;
  return a * a * (1.0 - 8.0 * w2) / (4.0 * b * b * b * (1.0 + w2));
}

double kuramoto_cubic_noise(double omega) { return std::sqrt((1.0 + 4.0 * omega * omega) / 2.0); }

LimitSdeSpec LimitSdeSpec::cw_cubic_1d() {
  LimitSdeSpec s;
  s.kind = LimitKind::kCwCubic1d;
  s.drift_coefficient = 2.0 / 3.0;
  s.noise = 2.0;
  return s;
}

LimitSdeSpec LimitSdeSpec::cw_random_slope(double beta, const DisorderLaw& law) {
  LimitSdeSpec s;
  s.kind = LimitKind::kCwRandomSlope;
  s.slope_variance = law.expect([&](double eta) {
    const double t = std::tanh(beta * eta);
    return t * t;
  });
  return s;
}

LimitSdeSpec LimitSdeSpec::kuramoto_cubic_2d(double omega) {
  if (!(omega >= 0.0 && omega < 0.5)) {
    throw ConfigError("kuramoto_cubic_2d: omega must lie in [0, 1/2)");
  }
  LimitSdeSpec s;
  s.kind = LimitKind::kKuramotoCubic2d;
  s.omega = omega;
  s.drift_coefficient = kuramoto_cubic_coefficient(omega);
  s.noise = kuramoto_cubic_noise(omega);
  return s;
}

LimitSdeSpec LimitSdeSpec::linear_ou(Eigen::MatrixXd drift, Eigen::VectorXd noise,
                                     Eigen::MatrixXd initial_covariance) {
  const auto n = drift.rows();
  if (drift.cols() != n || noise.size() != n || initial_covariance.rows() != n ||
      initial_covariance.cols() != n) {
    throw ConfigError("linear_ou: drift, noise and initial covariance dimensions differ");
  }
  LimitSdeSpec s;
  s.kind = LimitKind::kLinearOu;
  s.ou_drift = std::move(drift);
  s.ou_noise = std::move(noise);
  s.ou_initial_covariance = std::move(initial_covariance);
  return s;
}

std::size_t LimitSdeSpec::dimension() const {
  switch (kind) {
    case LimitKind::kCwCubic1d:
    case LimitKind::kCwRandomSlope:
      return 1;
    case LimitKind::kKuramotoCubic2d:
      return 2;
    case LimitKind::kLinearOu:
      return static_cast<std::size_t>(ou_drift.rows());
  }
  return 0;
}

StoppingRule StoppingRule::radial(double r) {
  if (!(r > 0.0)) throw ConfigError("stopping radius must be > 0");
  StoppingRule s;
  s.kind = Kind::kRadial;
  s.radius = r;
  return s;
}

namespace {

double radius2(const std::vector<double>& v) {
  double r = v[0] * v[0];
  if (v.size() > 1) r += v[1] * v[1];
  return r;
}

Eigen::MatrixXd covariance_root(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

}  // namespace

LimitPath simulate_limit(const LimitSdeSpec& spec, double t_end, double dt, const SeedSpec& seed,
                         const StoppingRule& stopping, std::size_t record_every) {
  if (!(t_end >= 0.0)) throw ConfigError("simulate_limit: t_end must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("simulate_limit: dt must be > 0");
  const bool cubic = spec.kind == LimitKind::kCwCubic1d || spec.kind == LimitKind::kKuramotoCubic2d;
  if (cubic && dt > 1e-3 + 1e-15) throw ConfigError("simulate_limit: cubic kinds need dt <= 1e-3");
  if (spec.explosive() && stopping.kind == StoppingRule::Kind::kNone) {
    throw ConfigError("simulate_limit: explosive regime requires localization (radial stopping rule)");
  }

  auto rng = seed.engine(streams::kLimit);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t dim = spec.dimension();
  const auto steps = static_cast<std::size_t>(std::llround(std::ceil(t_end / dt - 1e-9)));

  LimitPath path;
  std::vector<double> v(dim, 0.0);
  const auto record = [&](double t) {
    path.times.push_back(t);
    path.values.push_back(v);
  };

  if (spec.kind == LimitKind::kCwRandomSlope) {
    const double slope_noise = std::sqrt(spec.slope_variance) * normal(rng);
    const auto value_at = [&](double t) { return 2.0 * slope_noise * t; };
    if (record_every > 0) {
      for (std::size_t i = 0; i <= steps; i += record_every) {
        const double t = std::min(t_end, dt * static_cast<double>(i));
        v[0] = value_at(t);
        record(t);
      }
    }
    v[0] = value_at(t_end);
    if (stopping.kind == StoppingRule::Kind::kRadial && v[0] * v[0] >= stopping.radius) {
      // first grid time with |Y|² ≥ radius
      const double t_hit = std::sqrt(stopping.radius) / std::abs(2.0 * slope_noise);
      path.stopping_time = std::min(t_end, dt * std::ceil(t_hit / dt - 1e-12));
      v[0] = value_at(*path.stopping_time);
    }
    path.final_value = v;
    return path;
  }

  if (spec.kind == LimitKind::kLinearOu) {
    const Eigen::MatrixXd root = covariance_root(spec.ou_initial_covariance);
    Eigen::VectorXd z(static_cast<Eigen::Index>(dim));
    for (auto& x : z) x = normal(rng);
    Eigen::VectorXd x = root * z;
    const double sq = std::sqrt(dt);
    for (std::size_t i = 0; i < dim; ++i) v[i] = x(static_cast<Eigen::Index>(i));
    if (record_every > 0) record(0.0);
    double t = 0.0;
    for (std::size_t step = 1; step <= steps; ++step) {
      const double h = std::min(dt, t_end - t);
      const double sh = h == dt ? sq : std::sqrt(h);
      Eigen::VectorXd drift = spec.ou_drift * x;
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        x(k) += drift(k) * h + spec.ou_noise(k) * sh * normal(rng);
      }
      t += h;
      for (std::size_t k = 0; k < dim; ++k) v[k] = x(static_cast<Eigen::Index>(k));
      if (record_every > 0 && (step % record_every == 0 || step == steps)) record(t);
    }
    path.final_value = v;
    return path;
  }

  // cubic kinds
  const bool tame = spec.drift_coefficient >= 0.0;
  const double sq = std::sqrt(dt);
  if (record_every > 0) record(0.0);
  double t = 0.0;
  std::vector<double> drift(dim);
  for (std::size_t step = 1; step <= steps; ++step) {
    const double h = std::min(dt, t_end - t);
    const double sh = h == dt ? sq : std::sqrt(h);
    const double r2 = radius2(v);
    double norm = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      drift[k] = -spec.drift_coefficient * v[k] * r2;
      norm += drift[k] * drift[k];
    }
    const double damp = tame ? 1.0 / (1.0 + h * std::sqrt(norm)) : 1.0;
    for (std::size_t k = 0; k < dim; ++k) v[k] += drift[k] * damp * h + spec.noise * sh * normal(rng);
    t += h;
    const bool stop = stopping.kind == StoppingRule::Kind::kRadial && radius2(v) >= stopping.radius;
    if (record_every > 0 && (step % record_every == 0 || step == steps || stop)) record(t);
    if (stop) {
      path.stopping_time = t;
      break;
    }
    if (!std::isfinite(v[0])) throw StepSizeError("simulate_limit: path overflowed");
  }
  path.final_value = v;
  return path;
}

std::vector<double> LimitEnsemble::component(std::size_t i) const {
  std::vector<double> out;
  out.reserve(final_values.size());
  for (const auto& v : final_values) out.push_back(v.at(i));
  return out;
}

std::vector<double> LimitEnsemble::radii() const {
  std::vector<double> out;
  out.reserve(final_values.size());
  for (const auto& v : final_values) out.push_back(std::sqrt(radius2(v)));
  return out;
}

double LimitEnsemble::stopped_fraction() const {
  if (stopping_times.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& s : stopping_times) n += s.has_value() ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(stopping_times.size());
}

LimitEnsemble simulate_limit_ensemble(const LimitSdeSpec& spec, double t_end, double dt,
                                      std::uint64_t base_seed, std::size_t n_paths,
                                      const StoppingRule& stopping, unsigned threads) {
  const auto paths = parallel_map(n_paths, resolve_thread_count(threads), [&](std::size_t i) {
    return simulate_limit(spec, t_end, dt, SeedSpec{base_seed, i}, stopping, 0);
  });
  LimitEnsemble e;
  e.final_values.reserve(n_paths);
  e.stopping_times.reserve(n_paths);
  for (const auto& p : paths) {
    e.final_values.push_back(p.final_value);
    e.stopping_times.push_back(p.stopping_time);
  }
  return e;
}

RadialMoments radial_moments(double omega, double t, std::size_t n_paths, double dt,
                             std::uint64_t base_seed, const StoppingRule& stopping,
                             unsigned threads) {
  if (n_paths < 2) throw ConfigError("radial_moments: need at least 2 paths");
  const auto spec = LimitSdeSpec::kuramoto_cubic_2d(omega);
  const auto e = simulate_limit_ensemble(spec, t, dt, base_seed, n_paths, stopping, threads);
  std::vector<double> r2;
  r2.reserve(n_paths);
  for (const auto& v : e.final_values) r2.push_back(radius2(v));
  const double n = static_cast<double>(n_paths);
  double mean = 0.0;
  for (double x : r2) mean += x;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : r2) {
    const double d = (x - mean) * (x - mean);
    m2 += d;
    m4 += d * d;
  }
  RadialMoments out;
  out.mean = mean;
  out.variance = m2 / (n - 1.0);
  out.se_mean = std::sqrt(out.variance / n);
  // SE of the sample variance from the spread of squared deviations
  const double mean_d = m2 / n;
  out.se_variance = std::sqrt(std::max(0.0, m4 / n - mean_d * mean_d) / n);
  out.n_paths = n_paths;
  out.stopped_fraction = e.stopped_fraction();
  return out;
}

std::vector<double> cubic_invariant_radii(double omega, std::size_t n, const SeedSpec& seed) {
  const double c = kuramoto_cubic_coefficient(omega);
  if (!(c > 0.0)) throw ConfigError("cubic_invariant_radii: no invariant law outside the ergodic regime");
  const double s = kuramoto_cubic_noise(omega);
  auto rng = seed.engine(streams::kStatistics);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> out(n);
  // density of u = ‖v‖² is ∝ exp(−c u²/(2s²)) on u ≥ 0
  const double scale = s / std::sqrt(c);
  for (auto& r : out) r = std::sqrt(std::abs(normal(rng)) * scale);
  return out;
}

}  // namespace meanfield::limits

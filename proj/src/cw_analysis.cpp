#include "meanfield/cw_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace meanfield::cw {

CwProfile CwProfile::from_plus(std::vector<double> q_plus) {
  CwProfile p;
  p.down.resize(q_plus.size());
  for (std::size_t k = 0; k < q_plus.size(); ++k) p.down[k] = 1.0 - q_plus[k];
  p.up = std::move(q_plus);
  return p;
}

double CwProfile::magnetization(const DisorderLaw& law) const {
  double m = 0.0;
  for (std::size_t k = 0; k < up.size(); ++k) m += (up[k] - down[k]) * law.weight(k);
  return m;
}

double CwProfile::normalization_error() const {
  double e = 0.0;
  for (std::size_t k = 0; k < up.size(); ++k) e = std::max(e, std::abs(up[k] + down[k] - 1.0));
  return e;
}

double CwProfile::sup_distance(const CwProfile& other) const {
  double d = 0.0;
  for (std::size_t k = 0; k < up.size(); ++k) {
    d = std::max({d, std::abs(up[k] - other.up[k]), std::abs(down[k] - other.down[k])});
  }
  return d;
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::kStable:
      return "stable";
    case Stability::kNeutral:
      return "neutral";
    case Stability::kUnstable:
      return "unstable";
  }
  return "stable";
}

CwProfile stationary_profile(double beta, const DisorderLaw& law, double m) {
  CwProfile p;
  p.up.resize(law.size());
  p.down.resize(law.size());
  for (std::size_t k = 0; k < law.size(); ++k) {
    const double h = beta * (m + law.value(k));
    // e^{±h}/(2cosh h) = (1 ± tanh h)/2
    const double t = std::tanh(h);
    p.up[k] = 0.5 * (1.0 + t);
    p.down[k] = 0.5 * (1.0 - t);
  }
  return p;
}

double self_consistency_residual(double beta, const DisorderLaw& law, double m) {
  return law.expect([&](double eta) { return std::tanh(beta * (m + eta)); }) - m;
}

double criticality_gap(double beta, const DisorderLaw& law, double m) {
  return beta * law.expect([&](double eta) {
           const double c = std::cosh(beta * (m + eta));
           return 1.0 / (c * c);
         }) -
         1.0;
}

namespace {

void mv_rhs(double beta, const DisorderLaw& law, const std::vector<double>& up,
            const std::vector<double>& down, std::vector<double>& dup) {
  double m = 0.0;
  for (std::size_t k = 0; k < up.size(); ++k) m += (up[k] - down[k]) * law.weight(k);
  for (std::size_t k = 0; k < up.size(); ++k) {
    const double e = std::exp(beta * (m + law.value(k)));
    dup[k] = e * down[k] - up[k] / e;
  }
}

}  // namespace

CwOdeTrajectory mckean_vlasov_cw(const CwProfile& q0, double beta, const DisorderLaw& law,
                                 double t_end, double dt, std::size_t record_every) {
  if (!(dt > 0.0)) throw ConfigError("mckean_vlasov_cw: dt must be > 0");
  if (!(t_end >= 0.0)) throw ConfigError("mckean_vlasov_cw: t_end must be >= 0");
  if (q0.up.size() != law.size() || q0.down.size() != law.size()) {
    throw StructuralError("mckean_vlasov_cw: profile and law supports differ");
  }
  if (q0.normalization_error() > 1e-10) {
    throw ConfigError("mckean_vlasov_cw: q0(1,eta) + q0(-1,eta) must equal 1");
  }
  for (std::size_t k = 0; k < law.size(); ++k) {
    if (q0.up[k] < 0.0 || q0.down[k] < 0.0) throw ConfigError("mckean_vlasov_cw: q0 < 0");
  }
  record_every = std::max<std::size_t>(record_every, 1);
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  const std::size_t m = law.size();

  CwOdeTrajectory out;
  std::vector<double> up = q0.up;
  std::vector<double> down = q0.down;
  std::vector<double> k1(m), k2(m), k3(m), k4(m), tu(m), td(m);
  out.times.push_back(0.0);
  out.profiles.push_back(q0);
  double t = 0.0;
  for (std::size_t step = 0; step < steps; ++step) {
    const double h = std::min(dt, t_end - t);
    mv_rhs(beta, law, up, down, k1);
    for (std::size_t k = 0; k < m; ++k) {
      tu[k] = up[k] + 0.5 * h * k1[k];
      td[k] = down[k] - 0.5 * h * k1[k];
    }
    mv_rhs(beta, law, tu, td, k2);
    for (std::size_t k = 0; k < m; ++k) {
      tu[k] = up[k] + 0.5 * h * k2[k];
      td[k] = down[k] - 0.5 * h * k2[k];
    }
    mv_rhs(beta, law, tu, td, k3);
    for (std::size_t k = 0; k < m; ++k) {
      tu[k] = up[k] + h * k3[k];
      td[k] = down[k] - h * k3[k];
    }
    mv_rhs(beta, law, tu, td, k4);
    for (std::size_t k = 0; k < m; ++k) {
      const double inc = h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
      up[k] += inc;
      down[k] -= inc;
    }
    t += h;
    double drift = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double e = std::abs(up[k] + down[k] - 1.0);
      drift = std::isfinite(up[k]) && std::isfinite(down[k]) ? std::max(drift, e) : 1.0;
      if (!(std::isfinite(up[k]) && std::isfinite(down[k])) || up[k] < -1e-6 || down[k] < -1e-6) {
        drift = 1.0;
      }
    }
    if (drift > 1e-6) {
      std::ostringstream os;
      os << "mckean_vlasov_cw: step size dt=" << dt << " too large (normalization drift " << drift
         << " at t=" << t << ")";
      throw StepSizeError(os.str());
    }
    if ((step + 1) % record_every == 0 || step + 1 == steps) {
      out.times.push_back(t);
      out.profiles.push_back({up, down});
    }
  }
  return out;
}

StationaryScan cw_stationary_states(double beta, const DisorderLaw& law, std::size_t grid_points) {
  if (grid_points < 3) throw ConfigError("cw_stationary_states: grid needs >= 3 points");
  const auto F = [&](double m) { return self_consistency_residual(beta, law, m); };
  std::vector<double> grid(grid_points);
  std::vector<double> vals(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) {
    grid[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    vals[i] = F(grid[i]);
  }

  struct Root {
    double m;
    bool degenerate;
  };
  std::vector<Root> roots{{0.0, false}};

  const auto bisect = [&](double a, double b, double fa) {
    double mid = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
      mid = 0.5 * (a + b);
      const double fm = F(mid);
      if (std::abs(fm) < 1e-12 || b - a < 1e-16) break;
      if ((fm < 0) == (fa < 0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    return mid;
  };

  constexpr double kExactZero = 1e-14;
  for (std::size_t i = 0; i < grid_points; ++i) {
    if (std::abs(vals[i]) < kExactZero) roots.push_back({grid[i], false});
    if (i + 1 < grid_points && std::abs(vals[i]) >= kExactZero &&
        std::abs(vals[i + 1]) >= kExactZero && (vals[i] < 0) != (vals[i + 1] < 0)) {
      roots.push_back({bisect(grid[i], grid[i + 1], vals[i]), false});
    }
    // tangential contact: local extremum of F that nearly touches zero
    if (i > 0 && i + 1 < grid_points && std::abs(vals[i]) >= kExactZero &&
        std::abs(vals[i]) < 1e-8 && (vals[i - 1] < 0) == (vals[i] < 0) &&
        (vals[i + 1] < 0) == (vals[i] < 0) &&
        std::abs(vals[i]) <= std::min(std::abs(vals[i - 1]), std::abs(vals[i + 1]))) {
      double a = grid[i - 1];
      double b = grid[i + 1];
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        const double c = b - g * (b - a);
        const double d = a + g * (b - a);
        if (std::abs(F(c)) < std::abs(F(d))) {
          b = d;
        } else {
          a = c;
        }
      }
      roots.push_back({0.5 * (a + b), true});
    }
  }
  std::sort(roots.begin(), roots.end(), [](const Root& a, const Root& b) { return a.m < b.m; });

  StationaryScan scan;
  for (const auto& r : roots) {
    if (!scan.states.empty() && std::abs(scan.states.back().m_star - r.m) < 1e-9) {
      if (r.m == 0.0) scan.states.back().m_star = 0.0;
      continue;
    }
    CwStationaryState st;
    st.m_star = r.m;
    st.profile = stationary_profile(beta, law, r.m);
    st.residual = std::abs(F(r.m));
    st.criticality_gap = criticality_gap(beta, law, r.m);
    if (r.degenerate || std::abs(st.criticality_gap) < 1e-9) {
      st.stability = Stability::kNeutral;
    } else {
      st.stability = st.criticality_gap < 0.0 ? Stability::kStable : Stability::kUnstable;
    }
    scan.states.push_back(std::move(st));
  }
  // F is odd, so roots come in ± pairs around m = 0
  if (scan.states.size() % 2 == 0) {
    std::ostringstream os;
    os << "grid too coarse to separate roots: found " << scan.states.size()
       << " roots, expected an odd count";
    scan.warnings.push_back(os.str());
  }
  return scan;
}

std::optional<double> critical_beta(const DisorderLaw& law) {
  const auto gap = [&](double b) { return criticality_gap(b, law, 0.0); };
  double min_abs = 0.0;
  double zero_weight = 0.0;
  for (const auto& a : law.atoms()) {
    if (a.value == 0.0) {
      zero_weight = a.weight;
    } else if (min_abs == 0.0 || std::abs(a.value) < min_abs) {
      min_abs = std::abs(a.value);
    }
  }
  // g(β) ≤ β, so β_c ≥ 1. An atom at 0 of weight w forces β_c ≤ 1/w; otherwise
  // every term β sech²(βη) has decayed well past β ≈ 40/min|η|.
  double upper = 1.0;
  if (zero_weight > 0.0) upper = std::max(upper, 1.0 / zero_weight + 1.0);
  if (min_abs > 0.0) upper = std::max(upper, 40.0 / min_abs);
  const double lower = 1.0;
  if (gap(lower) >= 0.0) return lower;
  constexpr std::size_t kScan = 200000;
  const double ratio = std::log(upper / lower) / static_cast<double>(kScan);
  double a = lower;
  double ga = gap(a);
  for (std::size_t i = 1; i <= kScan; ++i) {
    double b = lower * std::exp(ratio * static_cast<double>(i));
    const double gb = gap(b);
    if (ga < 0.0 && gb >= 0.0) {
      if (gb == 0.0) return b;
      for (int it = 0; it < 300 && b - a > 1e-15 * b; ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = gap(mid);
        if (gm == 0.0) return mid;
        if (gm < 0.0) {
          a = mid;
        } else {
          b = mid;
        }
      }
      return std::abs(gap(a)) < std::abs(gap(b)) ? a : b;
    }
    a = b;
    ga = gb;
  }
  return std::nullopt;
}

double SpectralDecompositionCw::nu_inner(const std::vector<double>& f,
                                         const std::vector<double>& g) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < nu.size(); ++k) acc += f[k] * g[k] * nu[k];
  return acc;
}

std::vector<double> SpectralDecompositionCw::apply(const std::vector<double>& phi) const {
  Eigen::Map<const Eigen::VectorXd> v(phi.data(), static_cast<Eigen::Index>(phi.size()));
  Eigen::VectorXd r = matrix * v;
  return {r.data(), r.data() + r.size()};
}

SpectralDecompositionCw linearized_cw(double beta, const DisorderLaw& law, double m_star) {
  const auto m = static_cast<Eigen::Index>(law.size());
  SpectralDecompositionCw out;
  Eigen::VectorXd c(m);
  Eigen::VectorXd nu(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    c(k) = std::cosh(beta * (m_star + law.value(static_cast<std::size_t>(k))));
    nu(k) = law.weight(static_cast<std::size_t>(k)) / c(k);
  }
  out.nu.assign(nu.data(), nu.data() + m);
  // 𝔏 = diag(c) − β·1·νᵀ; conjugating by diag(√ν) gives diag(c) − β√ν√νᵀ.
  out.matrix = c.asDiagonal();
  out.matrix -= beta * Eigen::VectorXd::Ones(m) * nu.transpose();
  const Eigen::VectorXd sq = nu.cwiseSqrt();
  Eigen::MatrixXd sym = c.asDiagonal();
  sym -= beta * sq * sq.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw InternalError("linearized_cw: eigensolver failed");
  out.eigenvalues = solver.eigenvalues();
  const Eigen::MatrixXd& u = solver.eigenvectors();
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<double> phi(static_cast<std::size_t>(m));
    Eigen::Index pivot = 0;
    for (Eigen::Index k = 0; k < m; ++k) {
      phi[static_cast<std::size_t>(k)] = u(k, i) / sq(k);
      if (std::abs(phi[static_cast<std::size_t>(k)]) >
          std::abs(phi[static_cast<std::size_t>(pivot)]) + 1e-12) {
        pivot = k;
      }
    }
    if (phi[static_cast<std::size_t>(pivot)] < 0.0) {
      for (auto& v : phi) v = -v;
    }
    out.basis.push_back(std::move(phi));
  }
  return out;
}

double CwCltParameters::predicted_variance(std::size_t i, double t) const {
  const auto ii = static_cast<Eigen::Index>(i);
  const double k = drift_rates(ii);
  const double vx = cov_x0(ii, ii);
  const double vh = cov_h(ii, ii);
  const double chx = cov_hx0(ii, ii);
  const double b2 = noise(ii) * noise(ii);
  if (std::abs(k) < 1e-12) {
    // X(t) = X(0) + 2ℋt + bW(t)
    return vx + 4.0 * t * t * vh + 4.0 * t * chx + b2 * t;
  }
  const double e = std::exp(-k * t);
  const double g = 2.0 * (1.0 - e) / k;  // coefficient of ℋ
  return e * e * vx + g * g * vh + 2.0 * e * g * chx + b2 / (2.0 * k) * (1.0 - e * e);
}

CwCltParameters cw_clt_parameters(const SpectralDecompositionCw& spec, double beta,
                                  const DisorderLaw& law, double m_star) {
  return cw_clt_parameters(spec, beta, law, m_star, spec.basis);
}

CwCltParameters cw_clt_parameters(const SpectralDecompositionCw& spec, double beta,
                                  const DisorderLaw& law, double m_star,
                                  const std::vector<std::vector<double>>& basis) {
  const std::size_t m = law.size();
  const auto n = static_cast<Eigen::Index>(basis.size());
  if (basis.size() != spec.basis.size()) {
    throw StructuralError("cw_clt_parameters: basis size differs from the eigenbasis");
  }
  std::vector<double> th(m), sh(m);
  for (std::size_t k = 0; k < m; ++k) {
    th[k] = std::tanh(beta * (m_star + law.value(k)));
    sh[k] = std::sinh(beta * (m_star + law.value(k)));
  }
  const auto integral = [&](const std::vector<double>& f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) acc += f[k] * law.weight(k);
    return acc;
  };
  std::vector<double> mean_th(basis.size()), mean_sh(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i].size() != m) throw StructuralError("cw_clt_parameters: basis support size");
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      a += basis[i][k] * th[k] * law.weight(k);
      b += basis[i][k] * sh[k] * law.weight(k);
    }
    mean_th[i] = a;
    mean_sh[i] = b;
  }
  CwCltParameters p;
  p.cov_x0.resize(n, n);
  p.cov_h.resize(n, n);
  p.cov_hx0.resize(n, n);
  p.noise.resize(n);
  p.eigenvalues = spec.eigenvalues;
  p.drift_rates = 2.0 * spec.eigenvalues;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& fi = basis[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& fj = basis[static_cast<std::size_t>(j)];
      std::vector<double> prod(m), prod_sh2(m), prod_shth(m);
      for (std::size_t k = 0; k < m; ++k) {
        prod[k] = fi[k] * fj[k];
        prod_sh2[k] = prod[k] * sh[k] * sh[k];
        prod_shth[k] = prod[k] * sh[k] * th[k];
      }
      const auto si = static_cast<std::size_t>(i);
      const auto sj = static_cast<std::size_t>(j);
      p.cov_x0(i, j) = integral(prod) - mean_th[si] * mean_th[sj];
      p.cov_h(i, j) = integral(prod_sh2) - mean_sh[si] * mean_sh[sj];
      p.cov_hx0(i, j) = integral(prod_shth) - mean_sh[si] * mean_th[sj];
    }
    p.noise(i) = 2.0 * std::sqrt(spec.nu_inner(fi, fi));
  }
  return p;
}

}  // namespace meanfield::cw

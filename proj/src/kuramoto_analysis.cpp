#include "meanfield/kuramoto_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace meanfield::kuramoto {

namespace {
constexpr double kPi = 3.141592653589793238462643383279;
}

CriticalCoupling theta_critical(double omega, const DisorderLaw& law) {
  const double inv = law.expect([&](double eta) { return 1.0 / (1.0 + 4.0 * omega * omega * eta * eta); });
  CriticalCoupling out;
  out.theta_c = 1.0 / inv;
  out.effective = out.theta_c;
  if (law.is_symmetric_unit_pair() && out.theta_c >= 2.0) {
    out.effective = 2.0;
    out.capped = true;
  }
  return out;
}

namespace {

struct DensityTable {
  std::vector<double> values;  // unnormalized, n points
  double z = 0.0;
  double cos_moment = 0.0;  // ∫cos x q dx after normalization
};

DensityTable tabulate_density(double r, double theta, double omega, double eta, std::size_t n) {
  const double a = omega * eta;
  const double k = theta * r;
  const double h = 2.0 * kPi / static_cast<double>(n);
  const auto g = [&](double y) { return std::exp(-2.0 * (a * y + k * std::cos(y))); };
  // cumulative I(x_i) = ∫_0^{x_i} g by Simpson on each cell
  std::vector<double> cum(n + 1, 0.0);
  double prev = g(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = h * static_cast<double>(i);
    const double next = g(x0 + h);
    cum[i + 1] = cum[i] + h / 6.0 * (prev + 4.0 * g(x0 + 0.5 * h) + next);
    prev = next;
  }
  const double total = cum[n];
  const double e4 = std::exp(4.0 * kPi * a);
  DensityTable t;
  t.values.resize(n);
  double z = 0.0;
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = h * static_cast<double>(i);
    // e^{4πa}∫_0^{2π} g + (1 − e^{4πa})∫_0^x g, regrouped into two nonnegative terms
    const double bracket = e4 * (total - cum[i]) + cum[i];
    const double v = std::exp(2.0 * (a * x + k * std::cos(x))) * bracket;
    t.values[i] = v;
    z += v;
    c += v * std::cos(x);
  }
  t.z = z * h;
  t.cos_moment = c / z;
  return t;
}

double coherence(double r, double theta, double omega, const DisorderLaw& law, std::size_t n) {
  double acc = 0.0;
  for (std::size_t a = 0; a < law.size(); ++a) {
    acc += law.weight(a) * tabulate_density(r, theta, omega, law.value(a), n).cos_moment;
  }
  return acc;
}

}  // namespace

double KuramotoStationaryState::normalization_error() const {
  double err = 0.0;
  const double h = 2.0 * kPi / static_cast<double>(grid.size());
  for (const auto& d : density) {
    double s = 0.0;
    for (double v : d) s += v;
    err = std::max(err, std::abs(s * h - 1.0));
  }
  return err;
}

double coherence_map(double r, double theta, double omega, const DisorderLaw& law,
                     std::size_t grid_points) {
  if (r == 0.0) return 0.0;
  return coherence(r, theta, omega, law, grid_points);
}

KuramotoStationaryState kuramoto_stationary(double r, double theta, double omega,
                                            const DisorderLaw& law, std::size_t grid_points) {
  if (grid_points < 512) throw ConfigError("kuramoto_stationary: grid needs >= 512 points");
  if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("kuramoto_stationary: r must lie in [0, 1]");
  KuramotoStationaryState st;
  st.r_star = r;
  st.grid.resize(grid_points);
  const double h = 2.0 * kPi / static_cast<double>(grid_points);
  for (std::size_t i = 0; i < grid_points; ++i) st.grid[i] = h * static_cast<double>(i);
  if (r == 0.0) {
    st.density.assign(law.size(), std::vector<double>(grid_points, 1.0 / (2.0 * kPi)));
    st.z_star.assign(law.size(), 1.0);
    st.coherence = 0.0;
    st.residual = 0.0;
    return st;
  }
  double coh = 0.0;
  for (std::size_t a = 0; a < law.size(); ++a) {
    auto t = tabulate_density(r, theta, omega, law.value(a), grid_points);
    for (auto& v : t.values) v /= t.z;
    coh += law.weight(a) * t.cos_moment;
    st.density.push_back(std::move(t.values));
    st.z_star.push_back(t.z);
  }
  const double refined = coherence(r, theta, omega, law, 2 * grid_points);
  if (std::abs(refined - coh) > 1e-6) {
    std::ostringstream os;
    os << "kuramoto_stationary: quadrature not converged (grid doubling moved the coherence by "
       << std::abs(refined - coh) << ")";
    throw ConfigError(os.str());
  }
  st.coherence = coh;
  st.residual = std::abs(coh - r);
  return st;
}

std::vector<double> solve_r_star(double theta, double omega, const DisorderLaw& law,
                                 std::size_t grid_points, std::size_t scan_points) {
  const auto G = [&](double r) { return coherence_map(r, theta, omega, law, grid_points) - r; };
  std::vector<double> roots{0.0};
  double a = 1.0 / static_cast<double>(scan_points);
  double ga = G(a);
  if (ga == 0.0) roots.push_back(a);
  for (std::size_t i = 2; i <= scan_points; ++i) {
    const double b = static_cast<double>(i) / static_cast<double>(scan_points);
    const double gb = G(b);
    if (gb == 0.0) {
      roots.push_back(b);
    } else if (ga != 0.0 && (ga < 0.0) != (gb < 0.0)) {
      double lo = a;
      double hi = b;
      double glo = ga;
      while (hi - lo > 1e-11) {
        const double mid = 0.5 * (lo + hi);
        const double gm = G(mid);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    a = b;
    ga = gb;
  }
  return roots;
}

KuramotoDensity KuramotoDensity::uniform(std::size_t n_atoms, std::size_t K) {
  KuramotoDensity d;
  d.K = K;
  d.coeffs.assign(n_atoms, std::vector<std::complex<double>>(K + 1));
  for (auto& c : d.coeffs) c[0] = 1.0 / (2.0 * kPi);
  return d;
}

double KuramotoDensity::value(std::size_t atom, double x) const {
  const auto& c = coeffs[atom];
  double v = c[0].real();
  for (std::size_t h = 1; h <= K; ++h) {
    v += 2.0 * (c[h] * std::polar(1.0, static_cast<double>(h) * x)).real();
  }
  return v;
}

double KuramotoDensity::min_value(std::size_t grid) const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < coeffs.size(); ++a) {
    for (std::size_t i = 0; i < grid; ++i) {
      m = std::min(m, value(a, 2.0 * kPi * static_cast<double>(i) / static_cast<double>(grid)));
    }
  }
  return m;
}

std::complex<double> KuramotoDensity::first_harmonic_total(const DisorderLaw& law) const {
  std::complex<double> acc = 0.0;
  for (std::size_t a = 0; a < coeffs.size(); ++a) acc += law.weight(a) * coeffs[a][1];
  return acc;
}

KuramotoDensity KuramotoDensity::resized(std::size_t K_new) const {
  KuramotoDensity d;
  d.K = K_new;
  d.coeffs.resize(coeffs.size());
  for (std::size_t a = 0; a < coeffs.size(); ++a) {
    d.coeffs[a].assign(K_new + 1, 0.0);
    for (std::size_t h = 0; h <= std::min(K, K_new); ++h) d.coeffs[a][h] = coeffs[a][h];
  }
  return d;
}

double KuramotoDensity::max_abs_difference(const KuramotoDensity& other) const {
  double d = 0.0;
  const std::size_t k = std::min(K, other.K);
  for (std::size_t a = 0; a < coeffs.size(); ++a) {
    for (std::size_t h = 0; h <= k; ++h) d = std::max(d, std::abs(coeffs[a][h] - other.coeffs[a][h]));
  }
  return d;
}

KuramotoDensity galerkin_rhs(const KuramotoDensity& q, double theta, double omega,
                             const DisorderLaw& law) {
  const std::complex<double> c1 = q.first_harmonic_total(law);
  const std::complex<double> i(0.0, 1.0);
  KuramotoDensity out;
  out.K = q.K;
  out.coeffs.assign(q.coeffs.size(), std::vector<std::complex<double>>(q.K + 1));
  for (std::size_t a = 0; a < q.coeffs.size(); ++a) {
    const auto& c = q.coeffs[a];
    const double eta = law.value(a);
    for (std::size_t h = 1; h <= q.K; ++h) {
      const double hd = static_cast<double>(h);
      const std::complex<double> next = h < q.K ? c[h + 1] : std::complex<double>(0.0);
      out.coeffs[a][h] = (-0.5 * hd * hd - i * hd * omega * eta) * c[h] +
                         hd * theta * kPi * (c1 * c[h - 1] - std::conj(c1) * next);
    }
  }
  return out;
}

namespace {

void axpy(KuramotoDensity& y, const KuramotoDensity& base, double s, const KuramotoDensity& k) {
  for (std::size_t a = 0; a < y.coeffs.size(); ++a) {
    for (std::size_t h = 0; h <= y.K; ++h) y.coeffs[a][h] = base.coeffs[a][h] + s * k.coeffs[a][h];
  }
}

KuramotoOdeTrajectory integrate(const KuramotoDensity& q0, double theta, double omega,
                                const DisorderLaw& law, double t_end, double dt,
                                std::size_t record_every) {
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  KuramotoOdeTrajectory out;
  out.times.push_back(0.0);
  out.densities.push_back(q0);
  KuramotoDensity q = q0;
  KuramotoDensity tmp = q0;
  double t = 0.0;
  for (std::size_t step = 0; step < steps; ++step) {
    const double h = std::min(dt, t_end - t);
    const auto k1 = galerkin_rhs(q, theta, omega, law);
    axpy(tmp, q, 0.5 * h, k1);
    const auto k2 = galerkin_rhs(tmp, theta, omega, law);
    axpy(tmp, q, 0.5 * h, k2);
    const auto k3 = galerkin_rhs(tmp, theta, omega, law);
    axpy(tmp, q, h, k3);
    const auto k4 = galerkin_rhs(tmp, theta, omega, law);
    for (std::size_t a = 0; a < q.coeffs.size(); ++a) {
      for (std::size_t hh = 1; hh <= q.K; ++hh) {
        q.coeffs[a][hh] += h / 6.0 *
                           (k1.coeffs[a][hh] + 2.0 * k2.coeffs[a][hh] + 2.0 * k3.coeffs[a][hh] +
                            k4.coeffs[a][hh]);
        if (!std::isfinite(q.coeffs[a][hh].real()) || !std::isfinite(q.coeffs[a][hh].imag())) {
          throw StepSizeError("mckean_vlasov_kuramoto: coefficients diverged, reduce dt");
        }
      }
    }
    t += h;
    if ((step + 1) % record_every == 0 || step + 1 == steps) {
      out.times.push_back(t);
      out.densities.push_back(q);
    }
  }
  return out;
}

}  // namespace

KuramotoOdeTrajectory mckean_vlasov_kuramoto(const KuramotoDensity& q0, double theta,
                                             double omega, const DisorderLaw& law, double t_end,
                                             double dt, std::size_t record_every,
                                             bool check_truncation) {
  if (q0.K < 8) throw ConfigError("mckean_vlasov_kuramoto: need K >= 8 harmonics");
  if (q0.coeffs.size() != law.size()) {
    throw StructuralError("mckean_vlasov_kuramoto: density and law supports differ");
  }
  if (!(dt > 0.0) || !(t_end >= 0.0)) throw ConfigError("mckean_vlasov_kuramoto: bad dt/t_end");
  for (const auto& c : q0.coeffs) {
    if (std::abs(c[0] - 1.0 / (2.0 * kPi)) > 1e-10) {
      throw ConfigError("mckean_vlasov_kuramoto: density must integrate to 1 per frequency");
    }
  }
  record_every = std::max<std::size_t>(record_every, 1);
  auto traj = integrate(q0, theta, omega, law, t_end, dt, record_every);
  if (check_truncation) {
    const auto fine = integrate(q0.resized(2 * q0.K), theta, omega, law, t_end, dt,
                                std::numeric_limits<std::size_t>::max());
    const double diff = traj.densities.back().max_abs_difference(fine.densities.back());
    if (diff > 1e-6) {
      std::ostringstream os;
      os << "mckean_vlasov_kuramoto: K=" << q0.K << " too small (doubling K changed the result by "
         << diff << ")";
      throw StructuralError(os.str());
    }
  }
  return traj;
}

Eigen::MatrixXcd linearized_block(int h, double theta, double omega, const DisorderLaw& law) {
  if (h == 0) throw ConfigError("linearized_block: h = 0 is the conserved mass sector");
  const auto m = static_cast<Eigen::Index>(law.size());
  const double hd = static_cast<double>(h);
  Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    block(a, a) = std::complex<double>(-0.5 * hd * hd,
                                       omega * law.value(static_cast<std::size_t>(a)) * hd);
  }
  if (std::abs(h) == 1) {
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        block(a, b) += 0.5 * theta * law.weight(static_cast<std::size_t>(b));
      }
    }
  }
  return block;
}

std::size_t SpectralDecompositionK::index(int h, std::size_t atom) const {
  const std::size_t ah = static_cast<std::size_t>(std::abs(h));
  if (h == 0 || ah > K) throw StructuralError("SpectralDecompositionK: harmonic out of range");
  const std::size_t base = h > 0 ? (ah - 1) : (K + ah - 1);
  return base * n_atoms + atom;
}

std::size_t SpectralDecompositionK::kernel_dimension(double tol) const {
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) n += std::abs(eigenvalues(i)) < tol ? 1 : 0;
  return n;
}

double SpectralDecompositionK::kernel_residual(double omega, const DisorderLaw& law) const {
  double res = 0.0;
  for (int sign : {1, -1}) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(matrix.rows());
    for (std::size_t a = 0; a < n_atoms; ++a) {
      v(static_cast<Eigen::Index>(index(sign, a))) =
          std::complex<double>(1.0, 2.0 * sign * omega * law.value(a));
    }
    res = std::max(res, (matrix * v).cwiseAbs().maxCoeff());
  }
  return res;
}

double SpectralDecompositionK::max_real_part() const {
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) m = std::max(m, eigenvalues(i).real());
  return m;
}

SpectralDecompositionK linearized_kuramoto(double theta, double omega, const DisorderLaw& law,
                                           std::size_t K) {
  if (K < 8) throw ConfigError("linearized_kuramoto: need K >= 8 harmonics");
  SpectralDecompositionK out;
  out.K = K;
  out.n_atoms = law.size();
  const auto m = static_cast<Eigen::Index>(law.size());
  const auto dim = static_cast<Eigen::Index>(2 * K) * m;
  out.matrix = Eigen::MatrixXcd::Zero(dim, dim);
  for (int sign : {1, -1}) {
    for (std::size_t h = 1; h <= K; ++h) {
      const int hh = sign * static_cast<int>(h);
      const auto at = static_cast<Eigen::Index>(out.index(hh, 0));
      out.matrix.block(at, at, m, m) = linearized_block(hh, theta, omega, law);
    }
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(out.matrix);
  if (solver.info() != Eigen::Success) throw InternalError("linearized_kuramoto: eigensolver failed");
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();
  if (law.is_symmetric_unit_pair() && std::abs(theta - (1.0 + 4.0 * omega * omega)) < 1e-12) {
    out.reference = analytic_spectrum(omega, K);
  }
  return out;
}

std::vector<std::complex<double>> analytic_spectrum(double omega, std::size_t K) {
  std::vector<std::complex<double>> s;
  s.insert(s.end(), 2, 0.0);
  s.insert(s.end(), 2, -0.5 + 2.0 * omega * omega);
  for (std::size_t h = 2; h <= K; ++h) {
    const double hd = static_cast<double>(h);
    s.insert(s.end(), 2, std::complex<double>(-0.5 * hd * hd, hd * omega));
    s.insert(s.end(), 2, std::complex<double>(-0.5 * hd * hd, -hd * omega));
  }
  return s;
}

KuramotoCltSystem kuramoto_clt_system(double theta, double omega, std::size_t h_max) {
  if (h_max < 1) throw ConfigError("kuramoto_clt_system: h_max must be >= 1");
  KuramotoCltSystem sys;
  sys.theta = theta;
  sys.omega = omega;
  sys.h_max = h_max;
  for (std::size_t h = 1; h <= h_max; ++h) {
    const double hd = static_cast<double>(h);
    const double d12 = 0.5 * ((h == 1 ? theta : 0.0) - hd * hd);
    const double d34 = -0.5 * hd * hd;
    const double w = hd * omega;
    Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
    a(0, 0) = d12;
    a(0, 3) = -w;
    a(1, 1) = d12;
    a(1, 2) = w;
    a(2, 2) = d34;
    a(2, 1) = -w;
    a(3, 3) = d34;
    a(3, 0) = w;
    sys.drift.push_back(a);
    // d/dx of the h-th harmonic carries a factor h into the quadratic variation
    sys.noise.push_back(hd / std::sqrt(2.0));
  }
  return sys;
}

Eigen::Matrix4d KuramotoCltSystem::stationary_covariance(std::size_t h) const {
  const Eigen::Matrix4d& a = block(h);
  Eigen::EigenSolver<Eigen::Matrix4d> es(a);
  if (es.eigenvalues().real().maxCoeff() >= 0.0) {
    throw StructuralError("stationary covariance requested for a block without decay");
  }
  const Eigen::Matrix4d id = Eigen::Matrix4d::Identity();
  Eigen::Matrix<double, 16, 16> kron;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      kron.block<4, 4>(4 * i, 4 * j) = id(i, j) * a + a(i, j) * id;
    }
  }
  const double s2 = noise_amplitude(h) * noise_amplitude(h);
  Eigen::Matrix<double, 16, 1> rhs;
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) rhs(4 * j + i) = -s2 * id(i, j);
  }
  const Eigen::Matrix<double, 16, 1> vec = kron.fullPivLu().solve(rhs);
  Eigen::Matrix4d sigma;
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) sigma(i, j) = vec(4 * j + i);
  }
  return 0.5 * (sigma + sigma.transpose());
}

Eigen::Matrix4d KuramotoCltSystem::covariance_at(std::size_t h, double t) const {
  const Eigen::Matrix4d& a = block(h);
  const double s2 = noise_amplitude(h) * noise_amplitude(h);
  // Van Loan: exp([[−A, Q], [0, Aᵀ]] t) = [[·, F12], [0, F22]], ∫ = F22ᵀ F12
  Eigen::Matrix<double, 8, 8> m = Eigen::Matrix<double, 8, 8>::Zero();
  m.block<4, 4>(0, 0) = -a * t;
  m.block<4, 4>(0, 4) = s2 * t * Eigen::Matrix4d::Identity();
  m.block<4, 4>(4, 4) = a.transpose() * t;
  const Eigen::Matrix<double, 8, 8> e = m.exp();
  const Eigen::Matrix4d phi = e.block<4, 4>(4, 4).transpose();
  const Eigen::Matrix4d noise_part = phi * e.block<4, 4>(0, 4);
  const Eigen::Matrix4d sigma = phi * initial_covariance() * phi.transpose() + noise_part;
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace meanfield::kuramoto

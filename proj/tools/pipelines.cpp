#include "pipelines.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "meanfield/core.hpp"
#include "meanfield/cw_analysis.hpp"
#include "meanfield/cw_dynamics.hpp"
#include "meanfield/experiments.hpp"
#include "meanfield/kuramoto_analysis.hpp"
#include "meanfield/kuramoto_dynamics.hpp"
#include "meanfield/limit_diffusions.hpp"
#include "meanfield/parallel.hpp"
#include "meanfield/stat_harness.hpp"

namespace meanfield::cli {

using nlohmann::json;
namespace fs = std::filesystem;

ConfigReader::ConfigReader(json config) : config_(std::move(config)) {
  if (!config_.is_object()) throw ConfigError("config must be a JSON object");
}

bool ConfigReader::has(const std::string& key) const { return config_.contains(key); }

const json& ConfigReader::at(const std::string& key) const {
  if (!config_.contains(key)) throw ConfigError("missing required key '" + key + "'");
  return config_.at(key);
}

double ConfigReader::number(const std::string& key, double fallback) {
  return has(key) ? number(key) : (resolved_[key] = fallback, fallback);
}

double ConfigReader::number(const std::string& key) {
  const auto& v = at(key);
  if (!v.is_number()) throw ConfigError("key '" + key + "' must be a number");
  used_.insert(key);
  resolved_[key] = v;
  return v.get<double>();
}

std::int64_t ConfigReader::integer(const std::string& key, std::int64_t fallback) {
  if (!has(key)) {
    resolved_[key] = fallback;
    return fallback;
  }
  const auto& v = at(key);
  if (!v.is_number_integer()) throw ConfigError("key '" + key + "' must be an integer");
  used_.insert(key);
  resolved_[key] = v;
  return v.get<std::int64_t>();
}

std::string ConfigReader::text(const std::string& key, const std::string& fallback) {
  if (!has(key)) {
    resolved_[key] = fallback;
    return fallback;
  }
  return text(key);
}

std::string ConfigReader::text(const std::string& key) {
  const auto& v = at(key);
  if (!v.is_string()) throw ConfigError("key '" + key + "' must be a string");
  used_.insert(key);
  resolved_[key] = v;
  return v.get<std::string>();
}

bool ConfigReader::flag(const std::string& key, bool fallback) {
  if (!has(key)) {
    resolved_[key] = fallback;
    return fallback;
  }
  const auto& v = at(key);
  if (!v.is_boolean()) throw ConfigError("key '" + key + "' must be true or false");
  used_.insert(key);
  resolved_[key] = v;
  return v.get<bool>();
}

std::uint64_t ConfigReader::seed() {
  if (!has("base_seed")) throw ConfigError("missing required key 'base_seed' (runs must be reproducible)");
  const auto& v = at("base_seed");
  const bool nonneg = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (!nonneg) throw ConfigError("key 'base_seed' must be a nonnegative integer");
  used_.insert("base_seed");
  resolved_["base_seed"] = v;
  return v.get<std::uint64_t>();
}

json ConfigReader::raw(const std::string& key) {
  used_.insert(key);
  resolved_[key] = at(key);
  return at(key);
}

void ConfigReader::finish() const {
  std::string unknown;
  for (const auto& [key, value] : config_.items()) {
    if (!used_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError("unknown config key(s): " + unknown);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : os_(path, std::ios::binary) {
    if (!os_) throw ConfigError("cannot write " + path.string());
    write_row(header);
  }
  void write_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) os_ << (i ? "," : "") << csv_field(fields[i]);
    os_ << "\r\n";
  }
  void write_numbers(const std::vector<std::string>& prefix, const std::vector<double>& values) {
    std::vector<std::string> f = prefix;
    for (double v : values) f.push_back(fmt(v));
    write_row(f);
  }

 private:
  std::ofstream os_;
};

/// Collects artifact descriptions for the manifest.
struct RunContext {
  std::string command;
  std::optional<fs::path> dir;
  std::vector<std::pair<std::string, std::string>> files;  // name, column description
  unsigned threads = 1;

  fs::path file(const std::string& name, const std::string& columns) {
    files.emplace_back(name, columns);
    return *dir / name;
  }
};

void write_outputs(RunContext& ctx, const ConfigReader& reader, const json& summary) {
  if (!ctx.dir) return;
  {
    std::ofstream os(*ctx.dir / "summary.json", std::ios::binary);
    os << std::setw(2) << summary << '\n';
  }
  ctx.files.emplace_back("summary.json", "JSON summary of the run");
  std::ofstream os(*ctx.dir / "manifest.txt", std::ios::binary);
  os << "meanfield " << kVersion << '\n';
  os << "command: " << ctx.command << '\n';
  os << "resolved config: " << reader.resolved().dump() << '\n';
  os << "files:\n";
  for (const auto& [name, cols] : ctx.files) os << "  " << name << ": " << cols << '\n';
}

SpaceScale parse_space(const std::string& s) {
  if (s == "sqrt_n") return SpaceScale::kSqrtN;
  if (s == "moderate") return SpaceScale::kModerate;
  throw ConfigError("space_scale must be 'sqrt_n' or 'moderate'");
}

TimeScale parse_time(const std::string& s) {
  if (s == "unit") return TimeScale::kUnit;
  if (s == "n_quarter") return TimeScale::kNQuarter;
  if (s == "n_half") return TimeScale::kNHalf;
  throw ConfigError("time_scale must be 'unit', 'n_quarter' or 'n_half'");
}

std::size_t positive(std::int64_t v, const std::string& key) {
  if (v < 1) throw ConfigError("key '" + key + "' must be >= 1");
  return static_cast<std::size_t>(v);
}

std::string column_doc(const std::vector<std::string>& labels, bool with_replica) {
  std::string s = with_replica ? "replica, t_observed" : "t_observed";
  for (const auto& l : labels) s += ", " + l;
  return s;
}

// -------------------------------------------------------------------------
// Replica drivers shared by simulate-* and ensemble

struct CwSetup {
  CwParams params;
  std::vector<std::vector<double>> basis;
  std::vector<std::string> labels;
  std::vector<double> q_plus;
  std::vector<double> q0_plus;
  SpaceScale space;
  TimeScale time;
  std::vector<double> grid;  // observed
};

CwSetup read_cw(ConfigReader& r) {
  const auto law = DisorderLaw::parse(r.text("law", "0:1"));
  const auto crit = cw::critical_beta(law);
  const double beta = r.has("beta") ? r.number("beta") : (crit ? *crit : 1.0);
  const auto n = r.integer("n", 1000);
  CwParams params{beta, law, n};
  params.validate();
  const double m_star = r.number("m_star", 0.0);
  if (std::abs(cw::self_consistency_residual(beta, law, m_star)) > 1e-9) {
    throw ConfigError("m_star is not a root of the self-consistency relation");
  }
  const auto lin = cw::linearized_cw(beta, law, m_star);
  const auto q = cw::stationary_profile(beta, law, m_star);
  std::vector<double> q0 = q.up;
  if (r.has("initial_magnetization")) {
    const double m0 = r.number("initial_magnetization");
    if (std::abs(m0) > 1.0) throw ConfigError("initial_magnetization must lie in [-1, 1]");
    q0.assign(law.size(), 0.5 * (1.0 + m0));
  }
  const auto space = parse_space(r.text("space_scale", "sqrt_n"));
  const auto time = parse_time(r.text("time_scale", "unit"));
  const double t_end = r.number("t_end", 1.0);
  const auto points = positive(r.integer("observations", 100), "observations");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be > 0");
  std::vector<double> grid(points + 1);
  for (std::size_t i = 0; i <= points; ++i) grid[i] = t_end * static_cast<double>(i) / static_cast<double>(points);
  grid.back() = t_end;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < lin.basis.size(); ++i) labels.push_back("Y" + std::to_string(i));
  return {params, lin.basis, labels, q.up, q0, space, time, grid};
}

FluctuationSeries run_cw(const CwSetup& s, const SeedSpec& seed) {
  const auto state = cw::initial_cw_state(s.params, s.q0_plus, seed);
  const double tf = time_factor(s.time, s.params.n_particles);
  std::vector<double> micro;
  for (double t : s.grid) micro.push_back(t * tf);
  const auto traj = cw::simulate_cw(state, s.params, micro.back(), micro, seed);
  auto series = cw::cw_order_parameters(traj, s.params.law, s.basis, s.q_plus, s.space, s.time, s.labels);
  // magnetization alongside the fluctuation coordinates
  series.labels.emplace_back("m");
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    series.values[i].push_back(traj.snapshots[i].magnetization());
  }
  return series;
}

struct KuramotoSetup {
  KuramotoParams params;
  kuramoto::ObservableConfig obs;
  double dt;
  std::int64_t steps;
  std::int64_t every;
};

KuramotoSetup read_kuramoto(ConfigReader& r) {
  const auto law = DisorderLaw::parse(r.text("law", "1:0.5,-1:0.5"));
  const double omega = r.number("omega", 0.25);
  const double theta = r.has("theta") ? r.number("theta") : kuramoto::theta_critical(omega, law).theta_c;
  const auto n = r.integer("n", 1024);
  KuramotoParams params{theta, omega, law, n};
  params.validate();
  kuramoto::ObservableConfig obs;
  obs.omega = omega;
  obs.h_max = positive(r.integer("h_max", 16), "h_max");
  obs.r = r.number("weight_exponent", 2.0);
  if (!(obs.r > 0.5)) throw ConfigError("weight_exponent must exceed 1/2");
  obs.space_scale = parse_space(r.text("space_scale", "moderate"));
  obs.time_scale = parse_time(r.text("time_scale", "n_half"));
  const double dt = r.number("dt", 1e-2);
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  const double tf = time_factor(obs.time_scale, n);
  const double t_end = r.number("t_end", 1.0);
  const auto points = positive(r.integer("observations", 100), "observations");
  const auto steps = static_cast<std::int64_t>(std::llround(t_end * tf / dt));
  if (steps < 1) throw ConfigError("t_end is shorter than one step");
  const auto every = std::max<std::int64_t>(1, steps / static_cast<std::int64_t>(points));
  return {params, obs, dt, steps, every};
}

FluctuationSeries run_kuramoto(const KuramotoSetup& s, const SeedSpec& seed) {
  auto state = kuramoto::initial_kuramoto_state(s.params, kuramoto::uniform_density(), seed);
  kuramoto::KuramotoIntegrator integ(s.params, s.dt, seed);
  FluctuationSeries series;
  series.space_scale = s.obs.space_scale;
  series.time_scale = s.obs.time_scale;
  series.labels = kuramoto::kuramoto_labels(s.obs.h_max);
  series.labels.emplace_back("r");
  const double tf = time_factor(s.obs.time_scale, s.params.n_particles);
  integ.advance(
      state, s.steps,
      [&](const kuramoto::RotatorState& st) {
        auto row = kuramoto::kuramoto_order_parameter_row(st, s.obs);
        row.push_back(kuramoto::order_parameter(st).r);
        series.append(st.time / tf, std::move(row));
      },
      s.every, true);
  return series;
}

void write_series(RunContext& ctx, const std::vector<FluctuationSeries>& all, bool per_replica) {
  if (!ctx.dir || all.empty()) return;
  const auto& labels = all.front().labels;
  if (per_replica) {
    for (std::size_t i = 0; i < all.size(); ++i) {
      CsvWriter w(ctx.file("replica_" + std::to_string(i) + ".csv", column_doc(labels, false)),
                  [&] {
                    std::vector<std::string> h{"t_observed"};
                    h.insert(h.end(), labels.begin(), labels.end());
                    return h;
                  }());
      for (std::size_t k = 0; k < all[i].times.size(); ++k) {
        w.write_numbers({fmt(all[i].times[k])}, all[i].values[k]);
      }
    }
    return;
  }
  std::vector<std::string> header{"replica", "t_observed"};
  header.insert(header.end(), labels.begin(), labels.end());
  CsvWriter w(ctx.file("trajectories.csv", column_doc(labels, true)), header);
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t k = 0; k < all[i].times.size(); ++k) {
      w.write_numbers({std::to_string(i), fmt(all[i].times[k])}, all[i].values[k]);
    }
  }
}

json final_summary(const std::vector<FluctuationSeries>& all) {
  json s = json::object();
  const auto& labels = all.front().labels;
  for (const auto& label : labels) {
    std::vector<double> last, sups;
    for (const auto& fs : all) {
      last.push_back(fs.values.back()[fs.column_index(label)]);
      sups.push_back(sup_abs(fs, label));
    }
    if (all.size() < 2) {
      s[label] = {{"final_value", last.front()}, {"sup_abs", sups.front()}};
      continue;
    }
    const auto sm = stats::summarize(last);
    s[label] = {{"final_mean", sm.mean},
                {"final_variance", sm.variance},
                {"final_se_mean", sm.se_mean},
                {"final_se_variance", sm.se_variance},
                {"median_sup_abs", stats::median(sups)}};
  }
  return s;
}

// -------------------------------------------------------------------------

int simulate(ConfigReader& r, RunContext& ctx, std::ostream& out, bool kuramoto_model, bool summary_only) {
  const auto base = r.seed();
  const auto replicas = positive(r.integer("replicas", 1), "replicas");
  const auto layout = r.text("csv_layout", "long");
  if (layout != "long" && layout != "per-replica") throw ConfigError("csv_layout must be 'long' or 'per-replica'");
  const bool per_replica = layout == "per-replica";
  std::vector<FluctuationSeries> all;
  json summary;
  if (kuramoto_model) {
    const auto s = read_kuramoto(r);
    r.finish();
    all = parallel_map(replicas, ctx.threads, [&](std::size_t i) { return run_kuramoto(s, SeedSpec{base, i}); });
    summary["theta"] = s.params.theta;
    summary["omega"] = s.params.omega;
  } else {
    const auto s = read_cw(r);
    r.finish();
    all = parallel_map(replicas, ctx.threads, [&](std::size_t i) { return run_cw(s, SeedSpec{base, i}); });
    summary["beta"] = s.params.beta;
  }
  summary["replicas"] = replicas;
  summary["statistics"] = final_summary(all);
  if (!summary_only) write_series(ctx, all, per_replica);
  write_outputs(ctx, r, summary);
  out << std::setw(2) << summary["statistics"] << '\n';
  return kExitOk;
}

int mckean_vlasov(ConfigReader& r, RunContext& ctx, std::ostream& out) {
  const std::string model = r.text("model");
  const double t_end = r.number("t_end", 10.0);
  const double dt = r.number("dt", 1e-3);
  const auto every = positive(r.integer("record_every", 100), "record_every");
  json summary;
  if (model == "cw") {
    const auto law = DisorderLaw::parse(r.text("law", "0:1"));
    const double beta = r.number("beta");
    const double m0 = r.number("initial_magnetization", 0.1);
    r.finish();
    if (std::abs(m0) > 1.0) throw ConfigError("initial_magnetization must lie in [-1, 1]");
    const auto q0 = cw::CwProfile::from_plus(std::vector<double>(law.size(), 0.5 * (1.0 + m0)));
    const auto traj = cw::mckean_vlasov_cw(q0, beta, law, t_end, dt, every);
    std::vector<std::string> header{"t_observed", "m"};
    for (std::size_t k = 0; k < law.size(); ++k) header.push_back("q_plus_" + std::to_string(k));
    if (ctx.dir) {
      CsvWriter w(ctx.file("mckean_vlasov.csv", "t_observed, m, q(+1, atom k) per atom in law order"), header);
      for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::vector<double> row{traj.profiles[i].magnetization(law)};
        row.insert(row.end(), traj.profiles[i].up.begin(), traj.profiles[i].up.end());
        w.write_numbers({fmt(traj.times[i])}, row);
      }
    }
    summary = {{"final_magnetization", traj.profiles.back().magnetization(law)},
               {"normalization_error", traj.profiles.back().normalization_error()}};
  } else if (model == "kuramoto") {
    const auto law = DisorderLaw::parse(r.text("law", "1:0.5,-1:0.5"));
    const double omega = r.number("omega", 0.25);
    const double theta = r.number("theta");
    const double eps = r.number("perturbation", 0.05);
    const auto K = positive(r.integer("harmonics", 32), "harmonics");
    r.finish();
    if (!(std::abs(eps) < 1.0)) throw ConfigError("perturbation must satisfy |perturbation| < 1");
    const auto q0 = kuramoto::KuramotoDensity::from_function(
        [&](double x, std::size_t) { return (1.0 + eps * std::cos(x)) / kuramoto::kTwoPi; }, law.size(), K);
    const auto traj = kuramoto::mckean_vlasov_kuramoto(q0, theta, omega, law, t_end, dt, every);
    if (ctx.dir) {
      CsvWriter w(ctx.file("mckean_vlasov.csv", "t_observed, r = 2pi|sum mu c_1|, re_c1, im_c1, min_density"),
                  {"t_observed", "r", "re_c1", "im_c1", "min_density"});
      for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const auto c1 = traj.densities[i].first_harmonic_total(law);
        w.write_numbers({fmt(traj.times[i])},
                        {kuramoto::kTwoPi * std::abs(c1), c1.real(), c1.imag(), traj.densities[i].min_value()});
      }
    }
    summary = {{"final_r", kuramoto::kTwoPi * std::abs(traj.densities.back().first_harmonic_total(law))}};
  } else {
    throw ConfigError("model must be 'cw' or 'kuramoto'");
  }
  write_outputs(ctx, r, summary);
  out << summary.dump(2) << '\n';
  return kExitOk;
}

json complex_json(std::complex<double> z) { return {z.real(), z.imag()}; }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

int analyze(ConfigReader& r, RunContext& ctx, std::ostream& out) {
  const std::string model = r.text("model");
  json summary;
  if (model == "cw") {
    const auto law = DisorderLaw::parse(r.text("law", "0:1"));
    const auto crit = cw::critical_beta(law);
    const double beta = r.has("beta") ? r.number("beta") : (crit ? *crit : 1.0);
    r.finish();
    out << "law " << law.to_string() << '\n';
    out << "beta_c " << (crit ? fmt(*crit) : std::string("none")) << '\n';
    out << "beta " << fmt(beta) << '\n';
    const auto scan = cw::cw_stationary_states(beta, law);
    json states = json::array();
    for (const auto& st : scan.states) {
      const auto lin = cw::linearized_cw(beta, law, st.m_star);
      const auto clt = cw::cw_clt_parameters(lin, beta, law, st.m_star);
      out << "\nstationary m* " << fmt(st.m_star) << "  " << cw::to_string(st.stability) << "  gap "
          << fmt(st.criticality_gap) << '\n';
      out << "  i  lambda_i                 drift 2*lambda_i         noise b_i                Var X_i(0)\n";
      for (Eigen::Index i = 0; i < lin.eigenvalues.size(); ++i) {
        out << "  " << i << "  " << std::setw(24) << std::left << fmt(lin.eigenvalues(i)) << std::setw(25)
            << fmt(clt.drift_rates(i)) << std::setw(25) << fmt(clt.noise(i)) << fmt(clt.cov_x0(i, i)) << std::right
            << '\n';
      }
      std::vector<double> eig(lin.eigenvalues.data(), lin.eigenvalues.data() + lin.eigenvalues.size());
      states.push_back({{"m_star", st.m_star},
                        {"stability", cw::to_string(st.stability)},
                        {"criticality_gap", st.criticality_gap},
                        {"eigenvalues", eig},
                        {"basis", lin.basis},
                        {"cov_x0", matrix_json(clt.cov_x0)},
                        {"cov_h", matrix_json(clt.cov_h)},
                        {"cov_hx0", matrix_json(clt.cov_hx0)},
                        {"noise", std::vector<double>(clt.noise.data(), clt.noise.data() + clt.noise.size())}});
    }
    for (const auto& w : scan.warnings) out << "warning: " << w << '\n';
    summary = {{"law", law.to_string()}, {"beta", beta}, {"stationary_states", states}};
    summary["beta_c"] = crit ? json(*crit) : json(nullptr);
  } else if (model == "kuramoto") {
    const auto law = DisorderLaw::parse(r.text("law", "1:0.5,-1:0.5"));
    const double omega = r.number("omega", 0.25);
    const auto crit = kuramoto::theta_critical(omega, law);
    const double theta = r.has("theta") ? r.number("theta") : crit.theta_c;
    const auto K = positive(r.integer("harmonics", 32), "harmonics");
    r.finish();
    const auto roots = kuramoto::solve_r_star(theta, omega, law);
    const auto spec = kuramoto::linearized_kuramoto(theta, omega, law, K);
    std::vector<std::complex<double>> eig(spec.eigenvalues.data(), spec.eigenvalues.data() + spec.eigenvalues.size());
    std::sort(eig.begin(), eig.end(), [](auto a, auto b) {
      return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });
    out << "law " << law.to_string() << "\ntheta_c " << fmt(crit.theta_c) << (crit.capped ? " (capped)" : "")
        << "\ntheta " << fmt(theta) << "\nomega " << fmt(omega) << "\nr* roots:";
    for (double x : roots) out << ' ' << fmt(x);
    out << "\nleading eigenvalues of the linearization at the uniform density:\n";
    json ej = json::array();
    for (std::size_t i = 0; i < eig.size(); ++i) {
      if (i < 8) out << "  " << fmt(eig[i].real()) << (eig[i].imag() < 0 ? " - " : " + ") << fmt(std::abs(eig[i].imag())) << "i\n";
      ej.push_back(complex_json(eig[i]));
    }
    summary = {{"law", law.to_string()},   {"omega", omega},        {"theta", theta},
               {"theta_c", crit.theta_c},  {"capped", crit.capped}, {"r_star", roots},
               {"eigenvalues", ej},        {"kernel_dimension", spec.kernel_dimension()}};
    if (law.is_symmetric_unit_pair()) {
      const auto clt = kuramoto::kuramoto_clt_system(theta, omega, 2);
      summary["h2_stationary_covariance"] = matrix_json(clt.stationary_covariance(2));
    }
  } else {
    throw ConfigError("model must be 'cw' or 'kuramoto'");
  }
  write_outputs(ctx, r, summary);
  return kExitOk;
}

int limit_sde(ConfigReader& r, RunContext& ctx, std::ostream& out) {
  const auto base = r.seed();
  const std::string kind = r.text("kind", "kuramoto-cubic");
  limits::LimitSdeSpec spec;
  if (kind == "cw-cubic") {
    spec = limits::LimitSdeSpec::cw_cubic_1d();
  } else if (kind == "kuramoto-cubic") {
    spec = limits::LimitSdeSpec::kuramoto_cubic_2d(r.number("omega", 0.25));
  } else if (kind == "cw-random-slope") {
    const auto law = DisorderLaw::parse(r.text("law", "0.3:0.5,-0.3:0.5"));
    const auto crit = cw::critical_beta(law);
    spec = limits::LimitSdeSpec::cw_random_slope(r.has("beta") ? r.number("beta") : (crit ? *crit : 1.0), law);
  } else {
    throw ConfigError("kind must be 'cw-cubic', 'kuramoto-cubic' or 'cw-random-slope'");
  }
  const double t_end = r.number("t_end", 1.0);
  const double dt = r.number("dt", 1e-4);
  const auto paths = positive(r.integer("paths", 1000), "paths");
  const double r_stop = r.number("r_stop", 0.0);
  r.finish();
  const auto rule = r_stop > 0.0 ? limits::StoppingRule::radial(r_stop) : limits::StoppingRule::none();
  const auto ens = limits::simulate_limit_ensemble(spec, t_end, dt, base, paths, rule, ctx.threads);
  if (ctx.dir) {
    std::vector<std::string> header{"path", "t_observed", "stopping_time"};
    for (std::size_t c = 0; c < spec.dimension(); ++c) header.push_back("V" + std::to_string(c + 1));
    CsvWriter w(ctx.file("final_values.csv", "path, t_observed (= t_end), stopping_time (empty if not stopped), V1.."),
                header);
    for (std::size_t i = 0; i < paths; ++i) {
      std::vector<std::string> f{std::to_string(i), fmt(t_end),
                                 ens.stopping_times[i] ? fmt(*ens.stopping_times[i]) : std::string()};
      for (double v : ens.final_values[i]) f.push_back(fmt(v));
      w.write_row(f);
    }
  }
  json summary = {{"kind", limits::to_string(spec.kind)},
                  {"drift_coefficient", spec.drift_coefficient},
                  {"noise", spec.noise},
                  {"stopped_fraction", ens.stopped_fraction()}};
  for (std::size_t c = 0; c < spec.dimension(); ++c) {
    const auto sm = stats::summarize(ens.component(c));
    summary["components"].push_back({{"mean", sm.mean}, {"variance", sm.variance}, {"se_variance", sm.se_variance}});
  }
  write_outputs(ctx, r, summary);
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int verify(ConfigReader& r, RunContext& ctx, std::ostream& out) {
  const auto& info = experiments::find(r.text("experiment"));
  experiments::ExperimentOptions opts;
  opts.base_seed = r.has("base_seed") ? r.seed() : opts.base_seed;
  opts.threads = ctx.threads;
  if (r.has("parameters")) {
    const auto p = r.raw("parameters");
    if (!p.is_object()) throw ConfigError("'parameters' must be an object");
    for (const auto& [k, v] : p.items()) {
      if (!v.is_number()) throw ConfigError("parameter '" + k + "' must be a number");
      opts.overrides[k] = v.get<double>();
    }
  }
  r.finish();
  const auto result = experiments::run(info, opts);
  out << "criterion " << info.criterion << " (" << info.name << "): " << (result.passed() ? "PASS" : "FAIL") << '\n';
  for (const auto& c : result.checks) {
    out << "  [" << (c.informational ? "info" : (c.passed ? "pass" : "FAIL")) << "] " << c.label << ": " << c.detail
        << '\n';
  }
  if (ctx.dir) {
    std::ofstream os(ctx.file("verdict.json", "experiment verdict with every check"), std::ios::binary);
    os << std::setw(2) << result.to_json() << '\n';
  }
  write_outputs(ctx, r, {{"experiment", info.name}, {"passed", result.passed()}, {"seconds", result.seconds}});
  return result.passed() ? kExitOk : kExitFailedCheck;
}

}  // namespace

int run_config(const json& config, unsigned threads, std::ostream& out) {
  ConfigReader r(config);
  RunContext ctx;
  ctx.command = r.text("command");
  ctx.threads = resolve_thread_count(threads);
  if (r.has("output_dir")) {
    ctx.dir = fs::path(r.text("output_dir"));
    std::error_code ec;
    fs::create_directories(*ctx.dir, ec);
    if (ec) throw ConfigError("cannot create output_dir: " + ec.message());
  }
  if (ctx.command == "simulate-cw") return simulate(r, ctx, out, false, false);
  if (ctx.command == "simulate-kuramoto") return simulate(r, ctx, out, true, false);
  if (ctx.command == "ensemble") {
    const std::string model = r.text("model");
    if (model != "cw" && model != "kuramoto") throw ConfigError("model must be 'cw' or 'kuramoto'");
    return simulate(r, ctx, out, model == "kuramoto", true);
  }
  if (ctx.command == "mckean-vlasov") return mckean_vlasov(r, ctx, out);
  if (ctx.command == "analyze") return analyze(r, ctx, out);
  if (ctx.command == "limit-sde") return limit_sde(r, ctx, out);
  if (ctx.command == "verify") return verify(r, ctx, out);
  throw ConfigError("unknown command '" + ctx.command + "'");
}

int run_config_file(const fs::path& path, unsigned threads, std::ostream& out) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read config " + path.string());
  json config;
  try {
    config = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return run_config(config, threads, out);
}

}  // namespace meanfield::cli

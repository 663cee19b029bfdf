#include "meanfield/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace meanfield {

namespace {

constexpr double kNormTol = 1e-12;

double parse_double(std::string_view s) {
  // std::from_chars for double is available in libstdc++ 11.
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("law: cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

DisorderLaw::DisorderLaw(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw ConfigError("law: at least one atom is required");
  std::sort(atoms_.begin(), atoms_.end(),
            [](const Atom& a, const Atom& b) { return a.value < b.value; });
  double sum = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const auto& a = atoms_[i];
    if (!std::isfinite(a.value) || !std::isfinite(a.weight)) {
      throw ConfigError("law: atoms must be finite");
    }
    if (!(a.weight > 0.0)) throw ConfigError("law: weights must be > 0");
    if (i > 0 && std::abs(a.value - atoms_[i - 1].value) <= kNormTol) {
      throw ConfigError("law: duplicate atom value");
    }
    sum += a.weight;
  }
  if (std::abs(sum - 1.0) > kNormTol) {
    std::ostringstream os;
    os << "law: weights must sum to 1 within 1e-12 (got " << sum << ")";
    throw ConfigError(os.str());
  }
  // evenness: atom i mirrors atom n-1-i
  const std::size_t n = atoms_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = atoms_[i];
    const auto& b = atoms_[n - 1 - i];
    if (std::abs(a.value + b.value) > kNormTol || std::abs(a.weight - b.weight) > kNormTol) {
      throw ConfigError("law: must be symmetric (each atom (v,w) needs a partner (-v,w))");
    }
  }
  cumulative_.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += atoms_[i].weight;
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;
}

DisorderLaw DisorderLaw::parse(std::string_view text) {
  std::vector<Atom> atoms;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string_view::npos) comma = text.size();
    auto item = text.substr(pos, comma - pos);
    auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError("law: expected 'value:weight' entries, got '" + std::string(item) + "'");
    }
    atoms.push_back({parse_double(item.substr(0, colon)), parse_double(item.substr(colon + 1))});
    pos = comma + 1;
  }
  return DisorderLaw(std::move(atoms));
}

DisorderLaw DisorderLaw::delta(double value) {
  if (value != 0.0) throw ConfigError("law: a single atom must sit at 0 to be even");
  return DisorderLaw({{0.0, 1.0}});
}

DisorderLaw DisorderLaw::symmetric_pair(double value) {
  if (value == 0.0) return delta(0.0);
  return DisorderLaw({{-std::abs(value), 0.5}, {std::abs(value), 0.5}});
}

std::size_t DisorderLaw::index_of(double v) const {
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (std::abs(atoms_[i].value - v) <= kNormTol) return i;
  }
  throw StructuralError("value is not an atom of the law");
}

bool DisorderLaw::is_symmetric_unit_pair() const {
  return atoms_.size() == 2 && std::abs(atoms_[0].value + 1.0) <= kNormTol &&
         std::abs(atoms_[1].value - 1.0) <= kNormTol;
}

std::string DisorderLaw::to_string() const {
  // shortest text that parses back to the same doubles
  const auto put = [](std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
  };
  std::string out;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (i) out += ',';
    put(out, atoms_[i].value);
    out += ':';
    put(out, atoms_[i].weight);
  }
  return out;
}

void CwParams::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("cw: beta must be finite and >= 0");
  if (n_particles < 1) throw ConfigError("cw: n_particles must be >= 1");
}

void KuramotoParams::validate() const {
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw ConfigError("kuramoto: theta must be finite and >= 0");
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw ConfigError("kuramoto: omega must be >= 0");
  if (n_particles < 1) throw ConfigError("kuramoto: n_particles must be >= 1");
}

void KuramotoParams::validate_critical() const {
  validate();
  if (!(omega < 0.5)) throw ConfigError("kuramoto: critical runs require omega < 1/2");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 SeedSpec::engine(std::uint64_t stream_tag) const {
  std::uint64_t h = splitmix64(base_seed);
  h = splitmix64(h ^ replica_index);
  h = splitmix64(h ^ (stream_tag * 0xd1b54a32d192ed03ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(stream_tag)};
  return std::mt19937_64(seq);
}

std::vector<std::size_t> sample_disorder_indices(const DisorderLaw& law, std::size_t n,
                                                 std::mt19937_64& rng) {
  std::vector<std::size_t> out(n);
  if (law.size() == 1) return out;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto& cum = law.cumulative_;
  for (auto& idx : out) {
    const double u = unif(rng);
    idx = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (idx >= cum.size()) idx = cum.size() - 1;
  }
  return out;
}

std::vector<std::size_t> sample_disorder_indices(const DisorderLaw& law, std::size_t n,
                                                 const SeedSpec& seed) {
  auto rng = seed.engine(streams::kDisorder);
  return sample_disorder_indices(law, n, rng);
}

std::vector<double> sample_disorder(const DisorderLaw& law, std::size_t n, const SeedSpec& seed) {
  if (n < 1) throw ConfigError("sample_disorder: n must be >= 1");
  const auto idx = sample_disorder_indices(law, n, seed);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = law.value(idx[i]);
  return out;
}

double CellTable::total() const {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

std::int64_t EmpiricalMeasure::total() const {
  std::int64_t acc = 0;
  for (auto c : counts) acc += c;
  return acc;
}

double space_factor(SpaceScale scale, std::int64_t n) {
  const double nn = static_cast<double>(n);
  return scale == SpaceScale::kSqrtN ? std::sqrt(nn) : std::pow(nn, 0.25);
}

double time_factor(TimeScale scale, std::int64_t n) {
  const double nn = static_cast<double>(n);
  switch (scale) {
    case TimeScale::kUnit:
      return 1.0;
    case TimeScale::kNQuarter:
      return std::pow(nn, 0.25);
    case TimeScale::kNHalf:
      return std::sqrt(nn);
  }
  return 1.0;
}

std::string to_string(SpaceScale s) { return s == SpaceScale::kSqrtN ? "sqrtN" : "moderate"; }

std::string to_string(TimeScale s) {
  switch (s) {
    case TimeScale::kUnit:
      return "unit";
    case TimeScale::kNQuarter:
      return "N_quarter";
    case TimeScale::kNHalf:
      return "N_half";
  }
  return "unit";
}

CellTable empirical_to_fluctuation(const EmpiricalMeasure& rho, const CellTable& reference,
                                   SpaceScale scale) {
  if (rho.n_states != reference.n_states || rho.n_fields != reference.n_fields ||
      rho.counts.size() != reference.values.size()) {
    throw StructuralError("fluctuation: empirical measure and reference have different cells");
  }
  if (std::abs(reference.total() - 1.0) > 1e-10) {
    throw StructuralError("fluctuation: reference is not a probability");
  }
  const std::int64_t n = rho.total();
  if (n < 1) throw StructuralError("fluctuation: empty empirical measure");
  const double inv_n = 1.0 / static_cast<double>(n);
  const double factor = space_factor(scale, n);
  CellTable out(rho.n_states, rho.n_fields);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = factor * (static_cast<double>(rho.counts[i]) * inv_n - reference.values[i]);
  }
  return out;
}

std::size_t FluctuationSeries::column_index(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  throw StructuralError("series: unknown column '" + std::string(label) + "'");
}

std::vector<double> FluctuationSeries::column(std::string_view label) const {
  const auto c = column_index(label);
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& row : values) out.push_back(row[c]);
  return out;
}

void FluctuationSeries::append(double t, std::vector<double> row) {
  if (row.size() != labels.size()) throw StructuralError("series: row width != label count");
  times.push_back(t);
  values.push_back(std::move(row));
}

double sup_abs(const FluctuationSeries& series, std::string_view label) {
  const auto c = series.column_index(label);
  double s = 0.0;
  for (const auto& row : series.values) s = std::max(s, std::abs(row[c]));
  return s;
}

}  // namespace meanfield

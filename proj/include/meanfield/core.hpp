#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace meanfield {

// Error taxonomy shared by every module. The CLI maps ConfigError to exit
// status 1; everything else is an internal failure.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Atom {
  double value = 0.0;
  double weight = 0.0;
};

/// Finite, even probability law on the real line. Atoms are kept sorted by
/// value. Construction validates positivity, normalization (1e-12) and
/// evenness; a violated invariant raises ConfigError naming it.
class DisorderLaw {
 public:
  explicit DisorderLaw(std::vector<Atom> atoms);

  /// Parses "v1:w1,v2:w2,..." (the CLI/config notation).
  static DisorderLaw parse(std::string_view text);
  static DisorderLaw delta(double value = 0.0);
  /// ½(δ_v + δ_{-v}).
  static DisorderLaw symmetric_pair(double value);

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double value(std::size_t i) const { return atoms_[i].value; }
  double weight(std::size_t i) const { return atoms_[i].weight; }

  /// Index of the atom equal to `v` (within 1e-12); throws StructuralError.
  std::size_t index_of(double v) const;
  /// True for ½(δ_1 + δ_{-1}).
  bool is_symmetric_unit_pair() const;

  template <class F>
  double expect(F&& f) const {
    double acc = 0.0;
    for (const auto& a : atoms_) acc += a.weight * f(a.value);
    return acc;
  }

  std::string to_string() const;

 private:
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;

  friend std::vector<std::size_t> sample_disorder_indices(const DisorderLaw&, std::size_t,
                                                          std::mt19937_64&);
};

struct CwParams {
  double beta;
  DisorderLaw law;
  std::int64_t n_particles;

  void validate() const;
};

struct KuramotoParams {
  double theta;
  double omega;
  DisorderLaw law;
  std::int64_t n_particles;

  void validate() const;
  /// Additionally enforces omega < 1/2, required by critical-fluctuation runs.
  void validate_critical() const;
};

/// Identifies one replica of an ensemble. Every random stream used by a run
/// is derived from (base_seed, replica_index, stream tag) by hashing, so
/// replicas have no sequential dependence on each other.
struct SeedSpec {
  std::uint64_t base_seed = 0;
  std::uint64_t replica_index = 0;

  std::mt19937_64 engine(std::uint64_t stream_tag) const;
  SeedSpec replica(std::uint64_t index) const { return {base_seed, index}; }
};

/// Stream tags. Distinct purposes within one replica never share a stream.
namespace streams {
inline constexpr std::uint64_t kDisorder = 0x01;
inline constexpr std::uint64_t kInitialState = 0x02;
inline constexpr std::uint64_t kDynamics = 0x03;
inline constexpr std::uint64_t kLimit = 0x04;
inline constexpr std::uint64_t kStatistics = 0x05;
}  // namespace streams

std::uint64_t splitmix64(std::uint64_t x);

std::vector<std::size_t> sample_disorder_indices(const DisorderLaw& law, std::size_t n,
                                                 std::mt19937_64& rng);
std::vector<std::size_t> sample_disorder_indices(const DisorderLaw& law, std::size_t n,
                                                 const SeedSpec& seed);
/// η_1..η_n drawn i.i.d. from `law`.
std::vector<double> sample_disorder(const DisorderLaw& law, std::size_t n, const SeedSpec& seed);

/// Table over (state, field-atom) cells, row-major by state.
struct CellTable {
  std::size_t n_states = 0;
  std::size_t n_fields = 0;
  std::vector<double> values;

  CellTable() = default;
  CellTable(std::size_t states, std::size_t fields)
      : n_states(states), n_fields(fields), values(states * fields, 0.0) {}

  double& at(std::size_t s, std::size_t f) { return values[s * n_fields + f]; }
  double at(std::size_t s, std::size_t f) const { return values[s * n_fields + f]; }
  double total() const;
};

/// Cell-keyed empirical measure: integer occupation counts per cell.
struct EmpiricalMeasure {
  std::size_t n_states = 0;
  std::size_t n_fields = 0;
  std::vector<std::int64_t> counts;

  std::int64_t at(std::size_t s, std::size_t f) const { return counts[s * n_fields + f]; }
  std::int64_t total() const;
};

enum class SpaceScale { kSqrtN, kModerate };
enum class TimeScale { kUnit, kNQuarter, kNHalf };

/// N^{1/2} for kSqrtN, N^{1/4} for kModerate (= N^{-1/4}·√N).
double space_factor(SpaceScale scale, std::int64_t n);
/// Microscopic time per unit of observed time: 1, N^{1/4} or N^{1/2}.
double time_factor(TimeScale scale, std::int64_t n);
std::string to_string(SpaceScale s);
std::string to_string(TimeScale s);

/// √N(ρ_N − q) per cell, times N^{-1/4} on the moderate scale. `reference` is
/// a probability over the same cells.
CellTable empirical_to_fluctuation(const EmpiricalMeasure& rho, const CellTable& reference,
                                   SpaceScale scale);

struct FluctuationSeries {
  std::vector<double> times;                ///< observed time
  std::vector<std::vector<double>> values;  ///< one row per time
  SpaceScale space_scale = SpaceScale::kSqrtN;
  TimeScale time_scale = TimeScale::kUnit;
  std::vector<std::string> labels;

  std::size_t column_index(std::string_view label) const;
  std::vector<double> column(std::string_view label) const;
  void append(double t, std::vector<double> row);
};

/// sup_t |series[label](t)|.
double sup_abs(const FluctuationSeries& series, std::string_view label);

}  // namespace meanfield

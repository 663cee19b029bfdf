#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace meanfield::experiments {

struct Check {
  std::string label;
  bool passed = false;
  std::string detail;
  bool informational = false;  ///< reported, never gating
};

struct ExperimentResult {
  std::string name;
  int criterion = 0;
  std::vector<Check> checks;
  nlohmann::json details = nlohmann::json::object();
  double seconds = 0.0;

  bool passed() const;
  nlohmann::json to_json() const;
};

struct ExperimentOptions {
  std::uint64_t base_seed = 0x4d46'2024'0001ULL;
  unsigned threads = 0;
  /// Named numeric parameters (replicas, omega, ...). Keys outside the
  /// experiment's parameter list are rejected.
  std::map<std::string, double> overrides;

  double get(const std::string& key, double fallback) const;
};

struct ExperimentInfo {
  std::string name;
  int criterion = 0;
  std::string title;
  double time_limit_seconds = 0.0;
  std::vector<std::string> parameters;
  ExperimentResult (*run)(const ExperimentOptions&) = nullptr;
};

const std::vector<ExperimentInfo>& registry();
/// Throws ConfigError for unknown names.
const ExperimentInfo& find(std::string_view name);

/// Validates overrides, runs, times the run and appends the runtime check.
ExperimentResult run(const ExperimentInfo& info, const ExperimentOptions& options);

}  // namespace meanfield::experiments

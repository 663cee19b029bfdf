#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>

#include <json.hpp>

namespace meanfield::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit statuses of every pipeline.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitFailedCheck = 2;

/// Typed access to a JSON config object. Keys are marked as consumed when
/// read; finish() rejects anything left over.
class ConfigReader {
 public:
  explicit ConfigReader(nlohmann::json config);

  bool has(const std::string& key) const;
  double number(const std::string& key, double fallback);
  double number(const std::string& key);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  std::string text(const std::string& key, const std::string& fallback);
  std::string text(const std::string& key);
  bool flag(const std::string& key, bool fallback);
  /// Mandatory nonnegative integer `base_seed`.
  std::uint64_t seed();
  nlohmann::json raw(const std::string& key);

  /// Throws ConfigError naming every unread key.
  void finish() const;
  const nlohmann::json& resolved() const { return resolved_; }

 private:
  const nlohmann::json& at(const std::string& key) const;

  nlohmann::json config_;
  nlohmann::json resolved_ = nlohmann::json::object();
  std::set<std::string> used_;
};

/// Runs one pipeline described by a config object with a "command" key
/// (simulate-cw, simulate-kuramoto, mckean-vlasov, analyze, limit-sde,
/// ensemble, verify). Artifacts go to config["output_dir"] when present.
/// Returns an exit status; ConfigError propagates to the caller.
int run_config(const nlohmann::json& config, unsigned threads, std::ostream& out);

/// Reads a UTF-8 JSON file and calls run_config.
int run_config_file(const std::filesystem::path& path, unsigned threads, std::ostream& out);

}  // namespace meanfield::cli

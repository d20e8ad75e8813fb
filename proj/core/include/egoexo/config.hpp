#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace egoexo {

/// Experiment record: global settings plus per-module key/value sections
/// ("synthesis", "retrieval", "flow", "metrics", ...).
struct RunConfig {
  std::string experiment = "egoexo";
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";
  int workers = 1;
  std::string log_level = "info";
  /// Device and precision hints are recorded only; execution is CPU float32.
  std::string device = "cpu";
  std::string precision = "float32";
  std::map<std::string, std::map<std::string, std::string>> sections;

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, std::string value);
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::string get_string(const std::string& section, const std::string& key, std::string fallback) const;
};

/// Parses a TOML-style file: top-level keys for the globals, `[section]`
/// tables for module blocks.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text);

std::string to_json(const RunConfig& cfg);
/// TOML text that load_run_config reads back to the same record.
std::string to_toml(const RunConfig& cfg);

enum class LogLevel { debug, info, warn, error };
LogLevel parse_log_level(std::string_view s);

using LogValue = std::variant<bool, long long, double, std::string>;
using LogFields = std::vector<std::pair<std::string, LogValue>>;

/// JSON-lines event log. Lines below the threshold are dropped.
class JsonlLogger {
 public:
  JsonlLogger() = default;
  JsonlLogger(const std::filesystem::path& path, LogLevel threshold, bool echo_stderr = false);

  void log(LogLevel level, std::string_view event, const LogFields& fields = {});
  void info(std::string_view event, const LogFields& fields = {}) { log(LogLevel::info, event, fields); }
  void debug(std::string_view event, const LogFields& fields = {}) { log(LogLevel::debug, event, fields); }
  void warn(std::string_view event, const LogFields& fields = {}) { log(LogLevel::warn, event, fields); }
  void error(std::string_view event, const LogFields& fields = {}) { log(LogLevel::error, event, fields); }

 private:
  std::ofstream out_;
  LogLevel threshold_ = LogLevel::info;
  bool echo_ = false;
};

}  // namespace egoexo

#include "egoexo/config.hpp"

#include <chrono>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "egoexo/error.hpp"
#include "json.hpp"

namespace egoexo {

std::optional<std::string> RunConfig::get(const std::string& section, const std::string& key) const {
  const auto s = sections.find(section);
  if (s == sections.end()) return std::nullopt;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return std::nullopt;
  return k->second;
}

void RunConfig::set(const std::string& section, const std::string& key, std::string value) {
  sections[section][key] = std::move(value);
}

int RunConfig::get_int(const std::string& section, const std::string& key, int fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  try {
    return std::stoi(*v);
  } catch (const std::exception&) {
    fail(ErrorKind::SchemaError, section + "." + key + ": expected an integer, got '" + *v + "'");
  }
}

double RunConfig::get_double(const std::string& section, const std::string& key, double fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  try {
    return std::stod(*v);
  } catch (const std::exception&) {
    fail(ErrorKind::SchemaError, section + "." + key + ": expected a number, got '" + *v + "'");
  }
}

bool RunConfig::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const auto v = get(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1") return true;
  if (*v == "false" || *v == "0") return false;
  fail(ErrorKind::SchemaError, section + "." + key + ": expected a boolean, got '" + *v + "'");
}

std::string RunConfig::get_string(const std::string& section, const std::string& key, std::string fallback) const {
  return get(section, key).value_or(std::move(fallback));
}

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
  return out;
}

RunConfig from_items(const std::vector<CLI::ConfigItem>& items) {
  RunConfig cfg;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string value = join(item.inputs);
    if (item.parents.empty()) {
      try {
        if (item.name == "experiment" || item.name == "name") cfg.experiment = value;
        else if (item.name == "seed") cfg.seed = std::stoull(value);
        else if (item.name == "out" || item.name == "out_dir") cfg.out_dir = value;
        else if (item.name == "workers") cfg.workers = std::stoi(value);
        else if (item.name == "log_level") cfg.log_level = value;
        else if (item.name == "device") cfg.device = value;
        else if (item.name == "precision") cfg.precision = value;
        else cfg.set("global", item.name, value);
      } catch (const std::exception&) {
        fail(ErrorKind::SchemaError, "config key '" + item.name + "' has invalid value '" + value + "'");
      }
    } else {
      std::string section = item.parents.front();
      for (std::size_t i = 1; i < item.parents.size(); ++i) section += "." + item.parents[i];
      cfg.set(section, item.name, value);
    }
  }
  return cfg;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  std::istringstream is(text);
  try {
    return from_items(CLI::ConfigTOML().from_config(is));
  } catch (const CLI::Error& e) {
    fail(ErrorKind::SchemaError, std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::MissingFile, "config file " + path.string() + " not found");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_json(const RunConfig& cfg) {
  nlohmann::json j{{"experiment", cfg.experiment}, {"seed", cfg.seed},       {"out_dir", cfg.out_dir.string()},
                   {"workers", cfg.workers},       {"log_level", cfg.log_level}, {"device", cfg.device},
                   {"precision", cfg.precision},   {"sections", cfg.sections}};
  return j.dump(2);
}

std::string to_toml(const RunConfig& cfg) {
  auto quote = [](const std::string& s) { return nlohmann::json(s).dump(); };
  std::ostringstream os;
  os << "experiment = " << quote(cfg.experiment) << '\n'
     << "seed = " << cfg.seed << '\n'
     << "out_dir = " << quote(cfg.out_dir.string()) << '\n'
     << "workers = " << cfg.workers << '\n'
     << "log_level = " << quote(cfg.log_level) << '\n'
     << "device = " << quote(cfg.device) << '\n'
     << "precision = " << quote(cfg.precision) << '\n';
  for (const auto& [name, kv] : cfg.sections) {
    os << "\n[" << name << "]\n";
    for (const auto& [k, v] : kv) os << k << " = " << quote(v) << '\n';
  }
  return os.str();
}

LogLevel parse_log_level(std::string_view s) {
  if (s == "debug") return LogLevel::debug;
  if (s == "info") return LogLevel::info;
  if (s == "warn" || s == "warning") return LogLevel::warn;
  if (s == "error") return LogLevel::error;
  fail(ErrorKind::InvalidArgument, "unknown log level '" + std::string(s) + "'");
}

namespace {

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
  }
  return "info";
}

}  // namespace

JsonlLogger::JsonlLogger(const std::filesystem::path& path, LogLevel threshold, bool echo_stderr)
    : threshold_(threshold), echo_(echo_stderr) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) fail(ErrorKind::MissingFile, "cannot open log " + path.string());
}

void JsonlLogger::log(LogLevel level, std::string_view event, const LogFields& fields) {
  if (level < threshold_) return;
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  nlohmann::json j{{"ts_ms", now}, {"level", level_name(level)}, {"event", std::string(event)}};
  for (const auto& [k, v] : fields) std::visit([&](const auto& x) { j[k] = x; }, v);
  const std::string line = j.dump();
  if (out_.is_open()) {
    out_ << line << '\n';
    out_.flush();
  }
  if (echo_) std::cerr << line << '\n';
}

}  // namespace egoexo

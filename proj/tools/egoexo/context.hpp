#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "egoexo/config.hpp"
#include "egoexo/dataset.hpp"
#include "egoexo/retrieval.hpp"
#include "egoexo/synthesis.hpp"

namespace egoexo::cli {

/// Bad or missing command-line input; mapped to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolved settings and output sinks of one CLI invocation. Subcommand flags
/// are folded into `cfg` sections before the command runs, so the config echo
/// alone reproduces the run.
struct Context {
  std::string command;
  RunConfig cfg;
  JsonlLogger log;

  const std::filesystem::path& out() const noexcept { return cfg.out_dir; }

  /// `[io] key`; throws UsageError naming `flag` when absent.
  std::string require(const std::string& key, const std::string& flag) const;
  std::string io(const std::string& key, std::string fallback = {}) const;

  /// Creates the output directory, opens `log.jsonl` and writes the config
  /// echo `run_config.toml`.
  void start();
};

Manifest load_manifest_arg(const Context& ctx);
Split split_arg(const Context& ctx, const std::string& fallback);

synthesis::SynthesisConfig synthesis_config(const RunConfig& cfg);
retrieval::RetrievalConfig retrieval_config(const RunConfig& cfg);
retrieval::InputOptions input_options(const RunConfig& cfg, const retrieval::RetrievalConfig& rc);

}  // namespace egoexo::cli

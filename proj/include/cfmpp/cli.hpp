#ifndef CFMPP_CLI_HPP
#define CFMPP_CLI_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cfmpp/core.hpp"
#include "cfmpp/infer.hpp"
#include "cfmpp/io.hpp"
#include "cfmpp/marks.hpp"
#include "cfmpp/random.hpp"

namespace cfmpp {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2, kExitNotConverged = 3 };

struct RunConfig {
  std::string command;
  json document;
  std::filesystem::path config_dir;  ///< relative input paths resolve here
  std::filesystem::path out = "out";
  RngSeed seed{0};
  int replicates = 1;
  std::string config_hash;  ///< FNV-1a of the config file bytes
};

/// Reads and validates the JSON config; flags override the file's seed,
/// replicates and output directory.
RunConfig load_run_config(const std::filesystem::path& file, const std::string& command,
                          std::optional<std::filesystem::path> out = std::nullopt,
                          std::optional<std::uint64_t> seed = std::nullopt,
                          std::optional<int> replicates = std::nullopt);

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> files;
  std::string message;
};

RunOutcome run_simulate(const RunConfig& cfg);
RunOutcome run_summarize(const RunConfig& cfg);
RunOutcome run_estimate(const RunConfig& cfg);
RunOutcome run_geometry(const RunConfig& cfg);
RunOutcome run_check(const RunConfig& cfg);

/// Dispatches on cfg.command.
RunOutcome run(const RunConfig& cfg);

/// One simulated replicate (shared by the simulate command and the checks).
Configuration simulate_replicate(const json& document, RngSeed seed);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace cfmpp

#endif  // CFMPP_CLI_HPP

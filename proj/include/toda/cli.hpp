#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

namespace toda {

// Resolved command-line options shared by every command.
struct CliOptions {
  std::string config;                    // manifest path
  std::string out;                       // output directory
  std::optional<unsigned long> seed;     // overrides manifest "seed"
  int workers = 1;
  double checkpoint_every = 0.0;         // overrides manifest when > 0
  std::string resume;                    // checkpoint to resume a flow from
};

// Exit codes: 0 ok, 2 config/validation, 3 missing artifact, 4 numerical failure.
enum ExitCode { kExitOk = 0, kExitConfig = 2, kExitMissing = 3, kExitNumerical = 4 };

// Runs one of flow, solve, green, testfn, classify, scan. Errors are caught,
// reported as one JSON object on `err`, and mapped to an exit code.
int run_command(const std::string& command, const CliOptions& opts, std::ostream& out,
                std::ostream& err);

// Individual commands; they throw toda::Error on failure.
nlohmann::json cmd_flow(const nlohmann::json& manifest, const CliOptions& opts);
nlohmann::json cmd_solve(const nlohmann::json& manifest, const CliOptions& opts);
nlohmann::json cmd_green(const nlohmann::json& manifest, const CliOptions& opts);
nlohmann::json cmd_testfn(const nlohmann::json& manifest, const CliOptions& opts);
nlohmann::json cmd_classify(const nlohmann::json& manifest, const CliOptions& opts);
nlohmann::json cmd_scan(const nlohmann::json& manifest, const CliOptions& opts);

}  // namespace toda

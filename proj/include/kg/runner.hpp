#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace kg::runner {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kInputError = 1, kVerificationFailure = 2 };

/// Validates a run configuration and fills every default. Unknown keys and
/// malformed values raise InvalidArgument. Idempotent: resolve(resolve(c)) == resolve(c).
json resolve_config(const json& config);

struct Outcome {
  int exit_code = kOk;
  json resolved;
  json result;
};

/// Executes `config` ("command" one of spectral, equilibrium, moments, design, mc).
/// When "out" is non-empty every artifact is computed first, then written atomically
/// into that directory together with the resolved config. Input errors propagate as
/// kg::Error; verification failures set exit_code = kVerificationFailure.
/// Relative file paths inside the config resolve against base_dir.
Outcome run(const json& config, const std::filesystem::path& base_dir = {});

struct ReproduceOptions {
  std::filesystem::path out;
  std::uint64_t seed = 20240611;
  bool inject_perturbation = false;
};

/// Runs the full acceptance suite and the figure rasters, writes manifest.json and
/// per-check artifacts into `out`, prints one line per check to `log`.
/// Returns kOk iff every check passes.
int reproduce_all(const ReproduceOptions& opts, std::ostream& log);

}  // namespace kg::runner

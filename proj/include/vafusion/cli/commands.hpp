#pragma once

#include <string>
#include <vector>

namespace vaf {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

/// Runs one command line (without the program name):
/// synth | train | eval | predict | filter. Returns the process exit code.
int run_cli(const std::vector<std::string>& args);

/// Applies VA_FUSION_LOG (trace, debug, info, warn, error, off) to the default logger.
void configure_logging();

}  // namespace vaf

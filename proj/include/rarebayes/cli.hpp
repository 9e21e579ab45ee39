#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rarebayes {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitPrecondition = 3,
};

/// Entry point of the `rarebayes` tool; args excludes the program name.
/// Subcommands: gamma, bounds, posterior, experiment.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rarebayes

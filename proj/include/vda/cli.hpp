#pragma once

#include <string>
#include <vector>

namespace vda {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,      // unknown subcommand or flag, bad flag value
  kExitConfig = 2,     // configuration rejected before any compute
  kExitFormat = 3,     // file missing, unreadable, or malformed
  kExitComponent = 4,  // a computation failed (divergence, non-finite values, ...)
};

/// Entry point of the `vda` tool; argv[0] is the program name.
int run_command(int argc, const char* const* argv);
int run_command(const std::vector<std::string>& args);

}  // namespace vda

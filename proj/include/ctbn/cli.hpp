#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ctbn {

// Exit codes of the command-line front end.
enum ExitCode {
  kExitOk = 0,
  kExitValidation = 1,
  kExitImpossibleEvidence = 2,
  kExitSizeCap = 3,
  kExitNotConverged = 4,
};

// Full command-line driver; `args` excludes the program name. Reports go to
// `out`, diagnostics to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctbn

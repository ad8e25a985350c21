#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "locrb/problem.hpp"

namespace locrb {

/// Exit statuses of the command line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitConfig = 3,
  kExitNotConverged = 4,
};

/// Runs `locrb <subcommand> ...`; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Applies "k=v,k=v" overrides (0-based component indices) to `base`.
ParameterVector parse_mu_spec(const std::string& spec, ParameterVector base);

}  // namespace locrb

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sparsematte {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitIo = 2,
    kExitNoConvergence = 3,
};

/// Runs the command line `args` (without the program name).
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Line-oriented key=value file; '#' starts a comment. Throws IoError when unreadable.
std::map<std::string, std::string> read_config(const std::string& path);

}  // namespace sparsematte

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gsc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 1;
inline constexpr int kExitUsageError = 2;

// Runs one subcommand. args excludes the program name. Reports go to out;
// JSON-lines logs, warnings and errors go to log.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log);

int run_cli(int argc, char** argv);

}  // namespace gsc

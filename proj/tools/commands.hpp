#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace xmh::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIo = 3,
  kFormat = 4,
  kBadData = 5,
};

// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xmh::cli

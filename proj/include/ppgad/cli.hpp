#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ppgad::cli {

// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,   // anything not covered below
  kConfig = 2,       // bad flags or an inconsistent configuration
  kIngestion = 3,    // unreadable, missing or malformed files
  kComputation = 4,  // degenerate data, failed fits, unmet evaluation needs
};

// Entry point of the `ppgad` binary. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace ppgad::cli

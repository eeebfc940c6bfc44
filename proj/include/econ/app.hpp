#pragma once

// The econprove command line, callable in-process.

#include <ostream>
#include <string>
#include <vector>

namespace econ {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitBackend = 2,
  kExitAcceptance = 3,
};

// args excludes the program name.
int RunApp(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace econ

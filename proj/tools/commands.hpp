#pragma once

#include <iosfwd>

#include "pistol/error.hpp"

namespace pistol::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kParse = 3,
  kValidation = 4,
  kIncompleteInput = 5,
  kConvergence = 6,
  kDivergence = 7,
  kIo = 8,
};

int exit_code(ErrorKind kind) noexcept;

/// Parses and runs one command. Results go to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pistol::cli

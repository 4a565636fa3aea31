#pragma once

#include <iosfwd>

namespace rgeom::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 2,
  kNumericalError = 3,
  kNotConverged = 4,
};

/// Parses argv and runs one subcommand. Human-readable output goes to `out`;
/// failures print a single line `rgeom-error kind=<kind> message="..."` to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rgeom::cli

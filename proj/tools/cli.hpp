#pragma once

#include <iosfwd>

namespace simcim::cli {

/// Parses the command line and runs one mode. Returns the process exit code:
/// 0 on success, 2 for usage and configuration errors, 1 for runtime failures.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace simcim::cli

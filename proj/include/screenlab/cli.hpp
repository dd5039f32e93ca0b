#pragma once

#include <iosfwd>

namespace screenlab {

/// Runs one `screenlab` subcommand. Exit codes: 0 success, 1 validation or
/// usage error, 2 runtime failure. Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace screenlab

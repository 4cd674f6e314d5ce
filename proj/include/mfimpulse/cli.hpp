#pragma once

#include <ostream>

namespace mfimpulse {

/// Command-line entry point. Exit codes: 0 success, 1 invalid input or failed
/// model condition, 2 numerical failure. Errors go to `err` as one JSON line.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mfimpulse

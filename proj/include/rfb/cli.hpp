// Command-line front end: simulate, sweep, eigen, bifurcate, field, calibrate.

#pragma once

#include <iosfwd>

namespace rfb {

/// Runs one subcommand. Returns 0 on success, 1 when the operation fails and
/// 2 on a usage error; failures print a JSON object to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rfb

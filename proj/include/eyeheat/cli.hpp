#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace eyeheat::cli {

/// Process exit codes.
enum ExitCode : int { ok = 0, numerical_failure = 1, config_error = 2 };

/// Runs one command line (args excludes the program name). Progress goes to
/// `out`, diagnostics to `err`. Every artifact written is recorded with its
/// SHA-256 in a JSON manifest (--manifest, default manifest.json).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eyeheat::cli

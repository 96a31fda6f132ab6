// Command-line driver: parses a subcommand with its flags (or a key=value
// configuration file), runs it, and writes a JSON or CSV report.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hoinf::cli {

enum ExitCode : int { kSuccess = 0, kValidationError = 1, kNumericalFailure = 2 };

/// argv-style entry point (args[0] is the program name). Reports go to `out`
/// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Golden values compiled in from data/golden_values.json.
const std::string& embedded_expectations();

}  // namespace hoinf::cli

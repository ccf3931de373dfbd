#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace decoyforge::cli {

/// Runs one CLI invocation; args excludes the program name. Writes results
/// to out, diagnostics (resolved config echo, error records) to err.
/// Exit codes: 0 success, 1 parse/validation errors, 2 solver
/// non-convergence or limits hit without an incumbent.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace decoyforge::cli

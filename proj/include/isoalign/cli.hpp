#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace isoalign::cli {

enum ExitCode : int {
    kOk = 0,
    kBoundFailure = 1,
    kContractViolation = 2,
    kFormatError = 3,
};

/// Runs one subcommand. args excludes the program name. The report goes to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace isoalign::cli

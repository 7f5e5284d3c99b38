#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace efs::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInvalid = 2, kIo = 3 };

/// Runs one command line (program name excluded). Results go to `out` (or to
/// --out when given), diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace efs::cli

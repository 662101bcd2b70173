#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cfpn::cli {

enum ExitCode : int { ok = 0, usage = 1, data = 2, numeric = 3 };

/// Runs one command line (argv[0] is the program name). Results go to
/// `out`, diagnostics to `err`.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace cfpn::cli

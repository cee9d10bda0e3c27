// Command-line front end. Verbs: eval, transform, apply, verify, report.
//
// Exit codes: 0 success, 2 usage, 3 numerical non-convergence, 4 verification
// failure. Options come from flags, then from a key=value config file (given by
// --config or the BESSELCZ_CONFIG environment variable), then from defaults.

#ifndef BESSELCZ_CLI_HPP
#define BESSELCZ_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace besselcz {

enum ExitCode { kExitOk = 0, kExitUsage = 2, kExitNumerical = 3, kExitVerification = 4 };

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace besselcz

#endif  // BESSELCZ_CLI_HPP

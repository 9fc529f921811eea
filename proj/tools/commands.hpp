#pragma once

namespace irpamg::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kAlgorithmError = 4 };

/// Parses the command line, runs one subcommand and maps failures to exit codes.
/// Errors are reported on stderr as {"v":1,"error":{"code","message"}}.
int run(int argc, char** argv);

}  // namespace irpamg::cli

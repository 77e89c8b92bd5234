#pragma once

#include <iosfwd>

namespace cbpt::cli {

enum ExitCode : int {
    kOk = 0,
    kRuntimeFailure = 1,
    kUsage = 2,
};

/// Runs the command line `argv[0] <subcommand> ...`. Diagnostics go to
/// `err`, short progress and summaries to `out`; results are only ever
/// written to the files named by flags.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cbpt::cli

#pragma once

#include <exception>
#include <iosfwd>

namespace wavesal {

/// Process exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitWindowing = 4,
  kExitNoSignal = 5,
};

/// Exit status reported for an exception escaping a subcommand.
int exit_code_for(const std::exception& e);

/// Runs the `wavesal` command line (simulate, detect, sweep, spectrum) and
/// returns the exit status. Diagnostics go to `err`, reports to `out`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace wavesal

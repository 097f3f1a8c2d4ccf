#pragma once

namespace modlab {

// Parses arguments and runs one subcommand. Returns the process exit code:
// 0 success, 1 iteration cap or failed check, 2 invalid input, 3 I/O failure.
int run_cli(int argc, char** argv);

}  // namespace modlab

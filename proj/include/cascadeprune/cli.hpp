#pragma once

namespace cascadeprune {

// Entry point of the command-line tool.  Returns the process exit status:
// 0 success, 1 configuration/input error, 2 runtime failure.
int run_cli(int argc, char** argv);

}  // namespace cascadeprune

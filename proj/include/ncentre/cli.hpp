#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ncentre {

enum ExitCode : int {
    exit_ok = 0,
    exit_check_failed = 1,
    exit_undetermined = 2,
    exit_usage = 64,
    exit_data = 65,
    exit_internal = 70,
};

/// Runs the command line `args` (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
double unit_draw(unsigned long long bits);

} // namespace ncentre

#pragma once

#include <iosfwd>

namespace ldenhancer {

// Entry point of the ldenhancer tool. Returns 0 on success, 2 for invalid
// arguments or configuration, 1 for runtime failures.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace ldenhancer

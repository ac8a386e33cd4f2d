#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ainr::cli {

// Runs one command line (args excludes the program name). Returns 0 on
// success, 1 on usage errors and 2 on runtime failures.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ainr::cli

#pragma once

#include <string>
#include <vector>

namespace cdptwin::cli {

/// Exit codes: 0 success, 2 invalid parameters or usage, 3 I/O or format
/// errors, 4 numerical failures, 1 anything else.
int run(int argc, char** argv);

/// `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace cdptwin::cli

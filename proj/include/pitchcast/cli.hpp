#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pitchcast::cli {

inline constexpr const char* kVersion = "pitchcast 0.1.0";

/// Runs one command line (without the program name). Exit status: 0 ok,
/// 1 usage, 2 input error, 3 internal error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pitchcast::cli

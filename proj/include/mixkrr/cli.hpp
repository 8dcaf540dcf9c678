#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mixkrr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

/// Runs one `mixkrr` invocation. args[0] is the program name. Human output
/// goes to `out`, diagnostics and usage text to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string version_string();

}  // namespace mixkrr::cli

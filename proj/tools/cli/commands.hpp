#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "forge/error.hpp"

namespace forge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;
inline constexpr int kExitContract = 5;

int exit_code(ErrorKind kind) noexcept;

// Parses a number written either plainly or as a fraction such as "8/255".
double parse_number(const std::string& text);

// Entry point shared by the executable and in-process tests. `args` excludes
// the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace forge::cli

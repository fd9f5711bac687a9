#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace shiftid::cli {

// Exit codes. Each outcome maps to exactly one code.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitShift = 10;
inline constexpr int kExitPrevalence = 11;
inline constexpr int kExitCovariate = 12;
inline constexpr int kExitMixed = 13;

// Runs one command. `args` excludes the program name. Machine output goes to
// `out` (or the --out file), logs and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shiftid::cli

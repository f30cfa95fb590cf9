#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace instret::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitBackend = 2;

/// Parses and runs one command line (argv[0] included). Usage errors print
/// help on `err` and return kExitValidation.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace instret::cli

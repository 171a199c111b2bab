#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mcqn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUnstable = 2;
inline constexpr int kExitIndeterminate = 3;

/// `args` excludes the program name. `in` backs `--network -`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in);

}  // namespace mcqn::cli

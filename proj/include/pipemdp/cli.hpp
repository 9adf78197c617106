#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pipemdp::cli {

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kArgs = 2, kNumerics = 3, kIo = 4, kBind = 5 };

/// Entry point of the `pipemdp` tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pipemdp::cli

#pragma once

#include <string>
#include <vector>

namespace forgetset::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;
inline constexpr int kNumerical = 3;

// Runs one invocation; args[0] is the program name.
int run(const std::vector<std::string>& args);

}  // namespace forgetset::cli

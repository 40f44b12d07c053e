#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace prefab::cli {

// Exit codes
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kMissingInput = 2;
inline constexpr int kConfigError = 3;

/// Runs one `prefab` command. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prefab::cli

#pragma once

#include <string>
#include <vector>

namespace recongan::cli {

// Exit codes: 0 success, 2 configuration error, 3 runtime/numeric failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

int run_cli(const std::vector<std::string>& args);

}  // namespace recongan::cli

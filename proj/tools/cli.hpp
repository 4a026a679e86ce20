#pragma once

#include <string>
#include <vector>

namespace bnmr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 1;
inline constexpr int kExitSamplerError = 2;

/// Runs one invocation; args exclude the program name, e.g. {"fit", "--input", "a.csv", ...}.
int run(const std::vector<std::string>& args);

}  // namespace bnmr::cli

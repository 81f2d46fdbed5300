#pragma once

#include <string>
#include <vector>

namespace crisisdqn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitUsage = 64;

// Relative --out paths are placed under this directory when it is set.
inline constexpr const char* kOutRootEnv = "CRISISDQN_OUT_ROOT";

// args excludes the program name.
int dispatch(const std::vector<std::string>& args);

}  // namespace crisisdqn::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spot::cli {

inline constexpr const char* kDataRootEnv = "SPOT_DATA_ROOT";
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one `spot` invocation; args exclude the program name. Failures print a
// one-line JSON error record {"error", "message", "command"} to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spot::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rse::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitDetected = 10;
inline constexpr int kExitIndistinguishable = 11;

/// Entry point of the `rse` tool. Output that is not written to --out goes to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace rse::cli

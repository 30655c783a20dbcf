#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace freqlab::cli {

constexpr const char* kVersion = "0.1.0";

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // some verdict is not acceptable
constexpr int kExitUsage = 2;    // bad flags, config, or unknown scenario
constexpr int kExitSolver = 3;   // the linear solver did not converge

/// freqlab modulus|solve|experiment [flags]. Returns the exit code; never calls exit().
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace freqlab::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "peerscore/config.hpp"

namespace peerscore::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRefuted = 3;

struct Output {
  std::string text;     // file contents
  std::string summary;  // one-line console summary
  int exit_code = kExitOk;
};

/// Commands: sensitivity, verify-sd, optimal-enforcement, budget,
/// counterexample, presets.
const std::vector<std::string>& commands();

/// Fills defaults so that the config alone determines the output.
Json normalize_config(const std::string& command, const Json& config);

/// Runs a command on a normalized config. Output text does not depend on
/// wall-clock time or thread count.
Output execute(const std::string& command, const Json& config);

/// "n:10:100:10", "prior:0.1:0.9:0.1" or "n:10,20,50".
Json parse_sweep(const std::string& text);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace peerscore::cli

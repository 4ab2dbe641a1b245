#pragma once

#include <json.hpp>

#include "quench/parallel.hpp"

namespace quench::cli {

inline constexpr const char* kVersion = "quench-dft 1.0.0";

enum ExitStatus : int { kSuccess = 0, kUsageError = 1, kStatisticalFail = 2 };

/// Fills defaults and checks an experiment config; throws UsageError naming the
/// offending key. The result is the canonical form embedded in summaries.
nlohmann::json validate_config(const nlohmann::json& config);

/// Runs one validated experiment and writes <output>.csv and <output>.json.
int run(const nlohmann::json& config, Exec exec);

/// Command-line entry point.
int main(int argc, char** argv);

}  // namespace quench::cli

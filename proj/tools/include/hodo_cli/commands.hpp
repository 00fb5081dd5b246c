#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hodo_cli/config.hpp"

namespace hodo::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kSolverFailure = 2,
  kGateFailure = 3,
};

struct RunOptions {
  int threads = 1;
  /// Overrides task.seed when set.
  std::optional<std::uint64_t> seed;
};

struct CommandOutput {
  int exit_code = kOk;
  /// The file payload: CSV for solve/blowup/compare, a report for period.
  std::string body;
  /// Short human-readable result for the terminal.
  std::string summary;
};

/// Dispatches on config.task.command.
CommandOutput run(const RunConfig& config, const RunOptions& options = {});

CommandOutput cmd_solve(const RunConfig& config, const RunOptions& options = {});
CommandOutput cmd_blowup(const RunConfig& config, const RunOptions& options = {});
CommandOutput cmd_period(const RunConfig& config, const RunOptions& options = {});
CommandOutput cmd_compare(const RunConfig& config, const RunOptions& options = {});

/// Round-trip-exact decimal text of a double ("nan", "inf" and "-inf" for
/// non-finite values).
std::string format_number(double v);

}  // namespace hodo::cli

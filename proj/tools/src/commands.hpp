#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace mpct::cli {

enum ExitCode : int {
  kOk = 0,
  kSchemaOrIo = 1,
  kUncertified = 2,
  kInfeasible = 3,
};

struct CommandOptions {
  std::filesystem::path config;
  /// Overrides the config's output directory when set.
  std::optional<std::filesystem::path> output_dir;
  bool dump_qp = false;
  /// solve: program JSON to solve instead of building one from the config.
  std::optional<std::filesystem::path> program;
  /// solve: also run the interior-point reference solver and report the gap.
  bool check = false;
  /// bench: horizons to sweep (defaults to the config's N).
  std::vector<int> horizons;
  int repeats = 5;
};

/// Each command returns an ExitCode and reports errors on `err`.
int cmd_design(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_simulate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_doa(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_solve(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace mpct::cli

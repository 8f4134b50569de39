#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hklab/cli/config.hpp"

namespace hklab::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct RunResult {
  /// command, digest, seed, resolved config, scalars, arrays, verdict, wall time
  Json record;
  int exit_code = 0;
  std::map<std::string, CsvTable> tables;
};

enum ExitCode { kSuccess = 0, kError = 1, kVerdictFalse = 2 };

const std::vector<std::string>& command_names();

/// Runs one subcommand. Throws ConfigError / InvalidArgument on bad input.
RunResult run_command(const std::string& command, Config config);

/// Runs the configs listed by a sweep document on `workers` threads and merges
/// the records in digest order.
RunResult run_sweep(const Json& document, std::optional<std::uint64_t> seed_override,
                    const std::filesystem::path& base_dir, int workers,
                    const std::optional<std::filesystem::path>& out_dir);

void write_outputs(const RunResult& result, const std::filesystem::path& dir);

/// Command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace hklab::cli

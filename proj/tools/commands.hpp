#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rankone/types.hpp"

namespace rankone::cli {

inline constexpr const char *kToolVersion = "0.1.0";

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::size_t> depth;
  std::optional<std::string> epsilonNum;
  std::optional<std::string> epsilonDen;
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  std::vector<OutputFile> files;
  std::vector<std::string> summary;
};

const std::vector<std::string> &command_names();

/// Computes every output in memory; throws on any error.
CommandResult run_command(const std::string &command, const Options &opt);

/// run_command, then writes the files. Returns the process exit code and
/// prints a JSON error report to `err` on failure.
int execute(const std::string &command, const Options &opt, std::ostream &log,
            std::ostream &err);

} // namespace rankone::cli

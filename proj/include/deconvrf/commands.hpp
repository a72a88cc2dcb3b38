#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace deconvrf {

enum ExitCode : int
{
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitVerdict = 4,
};

struct CommandOptions
{
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  /// estimate only
  std::filesystem::path data;
  std::string grid;
  std::string form = "direct";
  /// simulate only: also write x and theta columns
  bool components = false;
};

/// Each command reports errors on `err` and returns the exit code.
int cmd_simulate(const CommandOptions& opts, std::ostream& err);
int cmd_estimate(const CommandOptions& opts, std::ostream& err);
int cmd_clt(const CommandOptions& opts, std::ostream& err);
/// Writes the check report to `out` (or to opts.out when set).
int cmd_check(const CommandOptions& opts, std::ostream& out, std::ostream& err);

} // namespace deconvrf

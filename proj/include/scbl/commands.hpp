#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace scbl {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_acceptance = 4 };

struct CommandOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> out;  // overrides the config "output"
    int workers = 0;                           // <= 0: logical cores
    std::optional<std::string> cache;          // overrides the config "cache"
    std::optional<std::uint64_t> seed;         // overrides engine.seed
};

const std::vector<std::string>& command_names();

/// Runs one command and returns its exit code. Progress goes to `log`,
/// failures (naming the module and operation) to `err`.
int run_command(const std::string& name, const CommandOptions& options, std::ostream& log, std::ostream& err);

}  // namespace scbl

#pragma once

#include "pft/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace pft {

/// Exit codes of the command-line tool.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 1;
inline constexpr int data = 2;
inline constexpr int runtime = 3;
} // namespace exit_code

struct CommandResult {
    int exit_code = exit_code::ok;
    std::vector<std::filesystem::path> artifacts;
    std::string summary;
};

/// Inputs shared by all commands after flag and file resolution.
struct CommandInputs {
    EngineConfig config;
    std::vector<std::filesystem::path> data;
    std::filesystem::path out_dir;
    std::filesystem::path pool_save;
    std::filesystem::path pool_load;
};

CommandResult cmd_run(const CommandInputs& in);
CommandResult cmd_compare(const CommandInputs& in);
CommandResult cmd_inspect_clusters(const CommandInputs& in);
CommandResult cmd_synth(const CommandInputs& in);

/// Maps the active exception to an exit code: ConfigError 1, DataError 2,
/// anything else 3.
int exit_code_for_current_exception(std::string& message);

/// Full command-line entry point. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace pft

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace prodemb::cli {

enum class Subcommand { Datagen, Train, Embed, Eval, Inspect, Help };

/// One parsed invocation. Unknown flags and subcommands are rejected at
/// parse time with a usage error.
struct Command {
    Subcommand subcommand = Subcommand::Help;

    std::string config_path;
    std::string data_path;
    std::string out_dir;
    std::string out_path;
    std::string csv_path;
    std::string ckpt_path;
    std::string resume_state;
    std::string task = "all";
    std::string side = "positive";
    std::string modality = "both";
    std::string level = "leaf";
    std::string ks = "1,5,10";
    std::string attention_path;
    std::uint64_t top_n = 10;
    std::uint64_t index = 0;
    bool help_requested = false;
};

/// Parses argv (without the program name). Throws Error(Usage) on
/// unknown subcommands/flags or missing required flags; --help turns
/// into help_requested.
Command parse_args(const std::vector<std::string>& args);

/// Runs a parsed command. Returns the process exit code.
int execute(const Command& cmd);

/// parse + execute + error-to-exit-code mapping (1 usage, 2 config,
/// 3 data, 4 runtime).
int run_cli(int argc, char** argv);

} // namespace prodemb::cli

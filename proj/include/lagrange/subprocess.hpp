#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lagrange {

struct RunResult {
    int exit_code = -1;
    std::string output;    // stdout and stderr interleaved
    double wall_time_s = 0.0;
};

// Runs argv[0] with the given arguments, capturing combined stdout/stderr.
// Does not involve a shell. Throws std::runtime_error on spawn failure.
RunResult run_command(const std::vector<std::string>& argv);

// Locates an executable: absolute/relative paths are checked directly,
// bare names are searched on PATH. Returns nullopt if not executable.
std::optional<std::string> find_executable(const std::string& name);

// Splits a command template into tokens. Handles double-quoted segments;
// no variable expansion or escapes beyond \" inside quotes.
std::vector<std::string> split_command(const std::string& command);

}  // namespace lagrange

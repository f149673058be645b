#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tbforge::proc {

struct ExecResult {
    int exit_code = -1;       // 128+signal when signalled, 127 when exec failed
    bool timed_out = false;
    std::string output;       // stdout and stderr combined, in arrival order
    double wall_seconds = 0.0;
};

// Runs argv[0] with the given arguments, capturing combined output. The child
// gets its own process group; on deadline the whole group is killed.
ExecResult run_command(const std::vector<std::string>& argv,
                       std::chrono::duration<double> timeout,
                       const std::optional<std::filesystem::path>& cwd = std::nullopt);

// Shell-style rendering of an argv for logs.
std::string format_argv(const std::vector<std::string>& argv);

// Absolute path of the running executable's directory, when the platform
// exposes it (used to locate bundled tools).
std::optional<std::filesystem::path> current_executable_dir();

// PATH lookup; empty when not found.
std::optional<std::filesystem::path> find_in_path(const std::string& name);

} // namespace tbforge::proc

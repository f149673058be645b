#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tbforge::harness {

// Sentinel contract: testbenches print exactly one of these to stdout. The
// prompt templates instruct the testbench agents to emit them; a missing
// sentinel counts as failure (fail-closed).
inline constexpr std::string_view kPassSentinel = "TBFORGE_PASS";
inline constexpr std::string_view kFailSentinel = "TBFORGE_FAIL";

struct ToolConfig {
    std::filesystem::path compiler_path;   // iverilog-style: compiler -o out srcs...
    std::filesystem::path runtime_path;    // vvp-style: runtime artifact
    double compile_timeout = 30.0;         // seconds, must be > 0
    double sim_timeout = 60.0;             // seconds, must be > 0
    std::filesystem::path workdir_root;
};

enum class VerifyKind { Pass, SimFail, CompileError, Timeout };

struct VerifyOutcome {
    VerifyKind kind = VerifyKind::SimFail;
    std::string log;          // argv header plus captured tool output
    double wall_time = 0.0;   // seconds
};

// The paper's three-way partition of generated code.
enum class Classification { Functional, SyntacticOnly, CompileError };

std::string_view kind_name(VerifyKind kind);
std::string_view classification_name(Classification c);

struct Compiled {
    std::filesystem::path artifact;
    std::filesystem::path workdir;
    std::string log;
    double wall_time = 0.0;
};

// Throws ConfigError on nonpositive timeouts or missing executables. Checked
// before any tool invocation.
void validate_config(const ToolConfig& cfg);

// Writes sources into a fresh isolated working directory and invokes the
// compiler. Returns the artifact on success; a CompileError or Timeout
// outcome otherwise. The workdir is the caller's to clean up.
std::variant<Compiled, VerifyOutcome> compile(const std::vector<std::string>& sources,
                                              const ToolConfig& cfg);

// Runs the compiled artifact and scans stdout for the sentinels. Pass iff the
// pass sentinel is present and the fail sentinel absent; SimFail when the fail
// sentinel is present, neither sentinel appears, or the runtime exits nonzero;
// Timeout on deadline.
VerifyOutcome simulate(const std::filesystem::path& artifact, const ToolConfig& cfg);

// compile + simulate for a (module, testbench) pair. CompileError
// short-circuits. The workdir is removed on Pass and retained under
// workdir_root otherwise, for debugging.
VerifyOutcome verify(const std::string& module_src, const std::string& tb_src,
                     const ToolConfig& cfg);

// Pass => Functional; SimFail or Timeout => SyntacticOnly (it compiled);
// CompileError => CompileError. A total partition.
Classification classify(const std::string& generated_code, const std::string& reference_tb,
                        const ToolConfig& cfg);

// Resolution order: explicit paths -> TBFORGE_IVERILOG/TBFORGE_VVP env ->
// iverilog/vvp on PATH -> bundled microv toolchain next to the running
// executable. Throws ConfigError when nothing usable is found.
ToolConfig resolve_toolchain(const std::filesystem::path& workdir_root,
                             const std::filesystem::path& compiler_override = {},
                             const std::filesystem::path& runtime_override = {});

} // namespace tbforge::harness

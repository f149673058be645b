#pragma once

#include "tbforge/agents.hpp"
#include "tbforge/harness.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace testsupport {

inline std::filesystem::path fixtures_dir() { return std::filesystem::path(TBFORGE_FIXTURES_DIR); }

inline std::filesystem::path microv_compile_path() { return TBFORGE_MICROV_COMPILE; }
inline std::filesystem::path microv_run_path() { return TBFORGE_MICROV_RUN; }
inline std::filesystem::path tbforge_cli_path() { return TBFORGE_CLI_BIN; }

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline std::string fixture_text(const std::string& name) { return read_file(fixtures_dir() / name); }

// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (prefix + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Toolchain for harness-driven tests: env/PATH iverilog when present,
// otherwise the bundled microv built alongside the test binaries.
inline tbforge::harness::ToolConfig toolchain(const std::filesystem::path& workroot) {
    auto cfg = tbforge::harness::resolve_toolchain(workroot);
    cfg.compile_timeout = 20.0;
    cfg.sim_timeout = 20.0;
    return cfg;
}

// Scripted backend that also records every prompt it saw, for asserting
// substitution and call sequences.
class SpyBackend final : public tbforge::agents::Backend {
public:
    void queue(tbforge::agents::AgentRole role, std::string text) {
        std::lock_guard<std::mutex> lock(mutex_);
        scripts_[role].push_back(std::move(text));
    }

    std::vector<std::pair<tbforge::agents::AgentRole, std::string>> prompts() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return prompts_;
    }

    std::uint64_t consumed() const { return consumed_; }

protected:
    tbforge::agents::AgentResponse do_complete(tbforge::agents::AgentRole role,
                                               const std::string& prompt) override {
        std::lock_guard<std::mutex> lock(mutex_);
        prompts_.emplace_back(role, prompt);
        auto& entries = scripts_[role];
        std::size_t index = next_[role];
        if (index >= entries.size()) {
            throw tbforge::ScriptExhaustedError(std::string(tbforge::agents::role_name(role)),
                                                index);
        }
        next_[role] = index + 1;
        ++consumed_;
        tbforge::agents::AgentResponse response;
        response.text = entries[index];
        response.usage.input_tokens = (prompt.size() + 3) / 4;
        response.usage.output_tokens = (response.text.size() + 3) / 4;
        return response;
    }

private:
    mutable std::mutex mutex_;
    std::map<tbforge::agents::AgentRole, std::vector<std::string>> scripts_;
    std::map<tbforge::agents::AgentRole, std::size_t> next_;
    std::vector<std::pair<tbforge::agents::AgentRole, std::string>> prompts_;
    std::uint64_t consumed_ = 0;
};

// Backend whose every completion throws, for errored-path tests.
class FailingBackend final : public tbforge::agents::Backend {
protected:
    tbforge::agents::AgentResponse do_complete(tbforge::agents::AgentRole,
                                               const std::string&) override {
        throw tbforge::BackendError("injected transport failure");
    }
};

inline std::string fenced(const std::string& code) {
    return "```verilog\n" + code + "```\n";
}

} // namespace testsupport

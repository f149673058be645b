#pragma once

#include "tbforge/corpus.hpp"
#include "tbforge/errors.hpp"

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tbforge::agents {

// Role 3 of the paper's trio (compiler/simulator) is the harness module, not
// an LLM agent, so it does not appear here.
enum class AgentRole {
    QualityRefiner,
    TestbenchWriter,
    TestbenchReviser,
    ReasoningDistiller,
    CodeGenerator,
};

inline constexpr std::array<AgentRole, 5> kAllRoles = {
    AgentRole::QualityRefiner,    AgentRole::TestbenchWriter,
    AgentRole::TestbenchReviser,  AgentRole::ReasoningDistiller,
    AgentRole::CodeGenerator,
};

std::string_view role_name(AgentRole role);
std::optional<AgentRole> role_from_name(std::string_view name);

struct TokenUsage {
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;

    bool operator==(const TokenUsage&) const = default;
};

struct AgentResponse {
    std::string text;
    TokenUsage usage;
    double latency = 0.0;  // seconds
};

struct ApiCounterSnapshot {
    std::uint64_t calls = 0;
    std::uint64_t transport_retries = 0;
};

// calls: one increment per completion returned to the caller.
// transport_retries: one increment per failed transport attempt. Both atomic;
// calls is monotonically non-decreasing within a run.
class ApiCounter {
public:
    void note_call() { calls_.fetch_add(1, std::memory_order_relaxed); }
    void note_transport_retry() { retries_.fetch_add(1, std::memory_order_relaxed); }
    ApiCounterSnapshot snapshot() const {
        return {calls_.load(std::memory_order_relaxed), retries_.load(std::memory_order_relaxed)};
    }

private:
    std::atomic<std::uint64_t> calls_{0};
    std::atomic<std::uint64_t> retries_{0};
};

// Uniform chat-completion interface. complete() increments the call counter
// exactly once per returned response, under any interleaving; errors propagate
// without incrementing it.
class Backend {
public:
    virtual ~Backend() = default;

    AgentResponse complete(AgentRole role, const std::string& prompt);

    ApiCounterSnapshot counter() const { return counter_.snapshot(); }

protected:
    virtual AgentResponse do_complete(AgentRole role, const std::string& prompt) = 0;
    void note_transport_retry() { counter_.note_transport_retry(); }

private:
    ApiCounter counter_;
};

// Deterministic replay backend: responses keyed by (role, per-role sequence
// index). Usage is synthesized from text lengths so identical scripts yield
// byte-identical responses and usage.
class ScriptedBackend final : public Backend {
public:
    ScriptedBackend() = default;

    static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

    void queue(AgentRole role, std::string text);

    // Responses handed out so far.
    std::uint64_t consumed() const { return consumed_.load(std::memory_order_relaxed); }

protected:
    AgentResponse do_complete(AgentRole role, const std::string& prompt) override;

private:
    std::mutex mutex_;
    std::map<AgentRole, std::vector<std::string>> scripts_;
    std::map<AgentRole, std::size_t> next_index_;
    std::atomic<std::uint64_t> consumed_{0};
};

struct HttpBackendConfig {
    std::string base_url;  // e.g. "http://127.0.0.1:8080/v1"
    std::string model;
    std::string api_key_env = "TBFORGE_API_KEY";
    int max_transport_attempts = 3;
    std::chrono::milliseconds retry_delay{250};
    double default_temperature = 0.8;          // generation roles
    double refiner_temperature = 0.0;          // editorial role
    std::map<AgentRole, double> temperature_override;
    std::chrono::seconds request_timeout{120};
};

// Live backend speaking the OpenAI-compatible chat-completion wire protocol:
// POST {base_url}/chat/completions with {model, messages, temperature}; reads
// choices[0].message.content and usage. Transport failures are retried up to
// max_transport_attempts with each failed attempt counted in transport_retries.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);

    double temperature_for(AgentRole role) const;

protected:
    AgentResponse do_complete(AgentRole role, const std::string& prompt) override;

private:
    HttpBackendConfig config_;
    std::string scheme_host_;  // "http://host:port"
    std::string path_prefix_;  // "/v1"
    std::string api_key_;
};

// Prompt templates are data: plain text with {placeholder} markers, one per
// role. Defaults are compiled in; a directory of <role>.txt files overrides.
class PromptLibrary {
public:
    static PromptLibrary with_defaults();

    void set_template(AgentRole role, std::string text);
    void load_directory(const std::filesystem::path& dir);
    const std::string& template_for(AgentRole role) const;

    // Pure function of (template, record, context). Context wins over record
    // fields. Unresolved placeholders raise TemplateError naming the
    // placeholder; they are never emitted literally.
    std::string render(AgentRole role, const corpus::ProblemRecord& record,
                       const std::map<std::string, std::string>& context = {}) const;

    // File name used for a role's template inside an override directory.
    static std::string template_filename(AgentRole role);

private:
    std::array<std::string, kAllRoles.size()> templates_;
};

// Core {placeholder} substitution over an explicit value map.
std::string render_template(const std::string& templ,
                            const std::map<std::string, std::string>& values);

// Returns the contents of the last fenced code block tagged as Verilog, or the
// last untagged block when none is tagged. Throws ExtractionError when the
// text has no candidate block.
std::string extract_code_block(const std::string& response_text);

} // namespace tbforge::agents

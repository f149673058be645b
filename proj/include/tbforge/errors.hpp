#pragma once

#include <stdexcept>
#include <string>

namespace tbforge {

// Base for all tbforge errors so callers can catch the whole family at once.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input text (bad JSON line, bad number, ...). Carries a 1-based
// line number when the input is line-oriented; 0 means "not line-addressable".
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Structurally valid input that violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Prompt template problems; names the offending placeholder.
class TemplateError : public Error {
public:
    TemplateError(const std::string& what, std::string placeholder)
        : Error(what), placeholder_(std::move(placeholder)) {}
    const std::string& placeholder() const { return placeholder_; }

private:
    std::string placeholder_;
};

// Agent backend failures (transport exhaustion, bad wire payloads, ...).
class BackendError : public Error {
public:
    using Error::Error;
};

// Scripted backend ran out of queued responses for a role.
class ScriptExhaustedError : public BackendError {
public:
    ScriptExhaustedError(std::string role, std::size_t index)
        : BackendError("script exhausted for role " + role + " at sequence index " +
                       std::to_string(index)),
          role_(std::move(role)),
          index_(index) {}
    const std::string& role() const { return role_; }
    std::size_t index() const { return index_; }

private:
    std::string role_;
    std::size_t index_;
};

// No usable fenced code block in an agent response.
class ExtractionError : public Error {
public:
    using Error::Error;
};

// Bad configuration: missing executables, nonpositive timeouts, unusable paths.
// Deliberately distinct from a CompileError outcome.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Mathematically invalid arguments (pass@k preconditions, elapsed <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

} // namespace tbforge

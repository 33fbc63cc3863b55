#pragma once

#include <stdexcept>
#include <string>

namespace acteval {

// Base for all tool errors; carries a stable machine-readable code
// alongside the human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config", message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("io", message) {}
};

// Prompt assembly failures.
class EmptyCriteriaError : public Error {
public:
    EmptyCriteriaError() : Error("empty_criteria", "criteria list is empty") {}
};

class MissingReferenceError : public Error {
public:
    MissingReferenceError() : Error("missing_reference", "reference document is required") {}
};

class BudgetExceededError : public Error {
public:
    explicit BudgetExceededError(const std::string& message) : Error("budget_exceeded", message) {}
};

// Gateway failures.
class BackendError : public Error {
public:
    enum class Kind { Timeout, HttpStatus, Transport, MalformedResponse };

    BackendError(Kind kind, const std::string& message, int status = 0)
        : Error("backend", message), kind_(kind), status_(status) {}

    Kind kind() const { return kind_; }
    int status() const { return status_; }

private:
    Kind kind_;
    int status_;
};

// Harness-level infrastructure failure (runner missing, sandbox copy failed).
class HarnessError : public Error {
public:
    explicit HarnessError(const std::string& message) : Error("harness", message) {}
};

// Metrics aggregation misuse.
class EmptyRecordsError : public Error {
public:
    EmptyRecordsError() : Error("empty_records", "no records to summarize") {}
};

class MixedCampaignError : public Error {
public:
    explicit MixedCampaignError(const std::string& message) : Error("mixed_campaign", message) {}
};

class ScenarioMismatchError : public Error {
public:
    explicit ScenarioMismatchError(const std::string& message) : Error("scenario_mismatch", message) {}
};

}  // namespace acteval

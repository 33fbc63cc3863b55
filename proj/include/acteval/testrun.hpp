#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace acteval::testrun {

// argv template; {workdir} {testfile} {resultfile} {covfile} {covtarget}
// placeholders are substituted per run. {testfile} and {resultfile} must be
// present somewhere in the template.
struct RunnerAdapterConfig {
    std::vector<std::string> command_template;
    std::chrono::milliseconds timeout{60000};
    std::map<std::string, std::string> env;
};

// Normalized outcome of one adapter invocation.
struct RunResult {
    int collected = 0;
    int executed = 0;  // tests that ran to a verdict
    int passed = 0;
    int failed = 0;
    std::optional<std::string> collection_error;  // normalized signature
    std::vector<std::string> runtime_errors;      // normalized signatures
    std::chrono::milliseconds duration{0};
    bool timed_out = false;
    // Set when the runner infrastructure itself failed:
    // "timeout", "adapter_protocol", "spawn_failed".
    std::optional<std::string> harness_error;
};

struct CoverageReading {
    std::string path;
    int lines_total = 0;
    int lines_hit = 0;
    double percent = 0.0;
};

CoverageReading make_coverage(const std::string& path, int lines_total, int lines_hit);

// Parses the normalized result-file JSON schema:
//   {"collected": n, "executed": n, "passed": n, "failed": n,
//    "collection_error": null | {"signature": "...", "message": "..."},
//    "runtime_errors": [{"test": "...", "signature": "...", "message": "..."}],
//    "tests": [{"name": "...", "outcome": "passed|failed|error|skipped"}]}
RunResult parse_result_file(const std::filesystem::path& path);

// Coverage file schema:
//   {"path": "rel/target.py", "executable_lines": [..], "hit_lines": [..]}
std::optional<CoverageReading> parse_coverage_file(const std::filesystem::path& path);

// Spawns the adapter command with placeholders substituted, kills the process
// group at timeout, then reads the result and coverage files. Infrastructure
// failures come back as harness_error on the RunResult, never as exceptions.
std::pair<RunResult, std::optional<CoverageReading>> execute_tests(
    const std::filesystem::path& testfile, const std::filesystem::path& workdir,
    const RunnerAdapterConfig& cfg, const std::string& coverage_target);

}  // namespace acteval::testrun

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acteval/gateway.hpp"
#include "acteval/harness.hpp"
#include "acteval/metrics.hpp"
#include "acteval/prompt.hpp"

namespace acteval::config {

struct ScenarioConfig {
    std::string id;
    std::filesystem::path fixture_root;
    std::filesystem::path criteria_file;
    std::optional<std::filesystem::path> feature_file;
    std::string coverage_target;  // relative to fixture_root
    std::vector<std::string> runner_command;  // argv template, {config_dir} pre-resolved
    std::map<std::string, std::string> runner_env;
    std::optional<std::chrono::milliseconds> timeout;  // overrides campaign default
    std::optional<std::filesystem::path> corpus_file;
};

struct CampaignDefaults {
    int n_trials = 100;
    int parallelism = 4;
    std::chrono::milliseconds timeout{60000};
};

struct ToolConfig {
    std::string backend_mode = "scripted";  // "live" | "scripted"
    gateway::BackendConfig backend;
    prompt::PromptTemplates templates;
    std::optional<std::filesystem::path> known_external_file;
    std::filesystem::path work_dir = "work";
    metrics::MetricOptions metric_options;
    CampaignDefaults campaign;
    std::vector<ScenarioConfig> scenarios;
};

// Flags that outrank both the environment and the file.
struct Overrides {
    std::optional<std::string> backend_mode;
    std::optional<std::string> work_dir;
};

// Parses the JSON config, rejecting unknown keys at every level, resolving
// every path relative to the config file and verifying it exists. Precedence
// per key: CLI flag > environment (ACTEVAL_BACKEND, ACTEVAL_WORK_DIR,
// ACTEVAL_API_KEY) > file > built-in default. The API key is env-only.
ToolConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

// Built-in defaults plus environment and CLI overrides; no scenarios.
ToolConfig default_config(const Overrides& overrides = {});

const ScenarioConfig* find_scenario(const ToolConfig& config, const std::string& id);

// Materializes the harness-facing scenario: loads criteria, parses the
// feature file when present, and builds the runner adapter config.
harness::BenchmarkScenario instantiate_scenario(const ToolConfig& config,
                                                const ScenarioConfig& scenario);

}  // namespace acteval::config

#include "acteval/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "acteval/errors.hpp"
#include "acteval/gherkin.hpp"
#include "acteval/postprocess.hpp"
#include "json.hpp"

namespace acteval::config {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown key \"" + key + "\" in " + where);
        }
    }
}

fs::path resolve(const fs::path& base_dir, const std::string& raw) {
    fs::path p(raw);
    return p.is_absolute() ? p : base_dir / p;
}

fs::path resolve_existing(const fs::path& base_dir, const std::string& raw,
                          const std::string& what) {
    fs::path p = resolve(base_dir, raw);
    if (!fs::exists(p)) throw ConfigError(what + " does not exist: " + p.string());
    return p;
}

void apply_backend_section(const json& section, gateway::BackendConfig& backend,
                           std::string& mode) {
    reject_unknown_keys(section,
                        {"mode", "endpoint_url", "completions_path", "model", "max_retries",
                         "retry_backoff_ms", "max_inflight", "requests_per_minute",
                         "rate_window_ms"},
                        "backend");
    if (section.contains("mode")) {
        mode = section.at("mode").get<std::string>();
        if (mode != "live" && mode != "scripted") {
            throw ConfigError("backend.mode must be \"live\" or \"scripted\"");
        }
    }
    if (section.contains("endpoint_url")) {
        backend.endpoint_url = section.at("endpoint_url").get<std::string>();
    }
    if (section.contains("completions_path")) {
        backend.completions_path = section.at("completions_path").get<std::string>();
    }
    if (section.contains("model")) backend.model = section.at("model").get<std::string>();
    if (section.contains("max_retries")) {
        backend.max_retries = section.at("max_retries").get<int>();
    }
    if (section.contains("retry_backoff_ms")) {
        backend.retry_backoff_base =
            std::chrono::milliseconds(section.at("retry_backoff_ms").get<long long>());
    }
    if (section.contains("max_inflight")) {
        backend.max_inflight = section.at("max_inflight").get<int>();
    }
    if (section.contains("requests_per_minute")) {
        backend.requests_per_minute = section.at("requests_per_minute").get<int>();
    }
    if (section.contains("rate_window_ms")) {
        backend.rate_window =
            std::chrono::milliseconds(section.at("rate_window_ms").get<long long>());
    }
}

void apply_prompts_section(const json& section, prompt::PromptTemplates& templates) {
    reject_unknown_keys(section,
                        {"nl_header", "gs_header", "gs_footer", "gen_header", "gen_footer",
                         "system_preamble", "budget_chars"},
                        "prompts");
    if (section.contains("nl_header")) {
        templates.nl_header = section.at("nl_header").get<std::string>();
    }
    if (section.contains("gs_header")) {
        templates.gs_header = section.at("gs_header").get<std::string>();
    }
    if (section.contains("gs_footer")) {
        templates.gs_footer = section.at("gs_footer").get<std::string>();
    }
    if (section.contains("gen_header")) {
        templates.gen_header = section.at("gen_header").get<std::string>();
    }
    if (section.contains("gen_footer")) {
        templates.gen_footer = section.at("gen_footer").get<std::string>();
    }
    if (section.contains("system_preamble")) {
        templates.system_preamble = section.at("system_preamble").get<std::string>();
    }
    if (section.contains("budget_chars")) {
        templates.budget_chars = section.at("budget_chars").get<std::size_t>();
    }
}

void apply_metrics_section(const json& section, metrics::MetricOptions& options) {
    reject_unknown_keys(section, {"pass_rate_denominator", "std"}, "metrics");
    if (section.contains("pass_rate_denominator")) {
        const std::string v = section.at("pass_rate_denominator").get<std::string>();
        if (v == "all_files") {
            options.denominator = metrics::PassRateDenominator::AllFiles;
        } else if (v == "executable_only") {
            options.denominator = metrics::PassRateDenominator::ExecutableOnly;
        } else {
            throw ConfigError(
                "metrics.pass_rate_denominator must be \"all_files\" or \"executable_only\"");
        }
    }
    if (section.contains("std")) {
        const std::string v = section.at("std").get<std::string>();
        if (v == "sample") options.std_convention = metrics::StdConvention::Sample;
        else if (v == "population") options.std_convention = metrics::StdConvention::Population;
        else throw ConfigError("metrics.std must be \"sample\" or \"population\"");
    }
}

void apply_campaign_section(const json& section, CampaignDefaults& campaign) {
    reject_unknown_keys(section, {"n_trials", "parallelism", "timeout_ms"}, "campaign");
    if (section.contains("n_trials")) campaign.n_trials = section.at("n_trials").get<int>();
    if (section.contains("parallelism")) {
        campaign.parallelism = section.at("parallelism").get<int>();
    }
    if (section.contains("timeout_ms")) {
        campaign.timeout = std::chrono::milliseconds(section.at("timeout_ms").get<long long>());
    }
    if (campaign.n_trials < 1) throw ConfigError("campaign.n_trials must be positive");
    if (campaign.parallelism < 1) throw ConfigError("campaign.parallelism must be positive");
}

ScenarioConfig parse_scenario(const json& section, const fs::path& base_dir) {
    reject_unknown_keys(section,
                        {"id", "fixture_root", "criteria", "feature", "coverage_target",
                         "runner_command", "runner_env", "timeout_ms", "corpus"},
                        "scenario");
    ScenarioConfig scenario;
    scenario.id = section.at("id").get<std::string>();
    if (scenario.id.empty()) throw ConfigError("scenario id must be nonempty");

    scenario.fixture_root = resolve_existing(
        base_dir, section.at("fixture_root").get<std::string>(),
        "scenario " + scenario.id + " fixture_root");
    if (!fs::is_directory(scenario.fixture_root)) {
        throw ConfigError("scenario " + scenario.id + " fixture_root is not a directory");
    }
    scenario.criteria_file =
        resolve_existing(base_dir, section.at("criteria").get<std::string>(),
                         "scenario " + scenario.id + " criteria file");
    if (section.contains("feature")) {
        scenario.feature_file =
            resolve_existing(base_dir, section.at("feature").get<std::string>(),
                             "scenario " + scenario.id + " feature file");
    }
    scenario.coverage_target = section.at("coverage_target").get<std::string>();
    if (!fs::exists(scenario.fixture_root / scenario.coverage_target)) {
        throw ConfigError("scenario " + scenario.id + " coverage_target not found: " +
                          (scenario.fixture_root / scenario.coverage_target).string());
    }
    scenario.runner_command =
        section.at("runner_command").get<std::vector<std::string>>();
    for (auto& arg : scenario.runner_command) {
        const std::string marker = "{config_dir}";
        size_t pos;
        while ((pos = arg.find(marker)) != std::string::npos) {
            arg.replace(pos, marker.size(), base_dir.string());
        }
    }
    bool has_testfile = false, has_resultfile = false;
    for (const auto& arg : scenario.runner_command) {
        if (arg.find("{testfile}") != std::string::npos) has_testfile = true;
        if (arg.find("{resultfile}") != std::string::npos) has_resultfile = true;
    }
    if (!has_testfile || !has_resultfile) {
        throw ConfigError("scenario " + scenario.id +
                          " runner_command must mention {testfile} and {resultfile}");
    }
    if (section.contains("runner_env")) {
        scenario.runner_env =
            section.at("runner_env").get<std::map<std::string, std::string>>();
    }
    if (section.contains("timeout_ms")) {
        scenario.timeout =
            std::chrono::milliseconds(section.at("timeout_ms").get<long long>());
    }
    if (section.contains("corpus")) {
        scenario.corpus_file = resolve_existing(base_dir,
                                                section.at("corpus").get<std::string>(),
                                                "scenario " + scenario.id + " corpus");
    }
    return scenario;
}

void apply_environment(ToolConfig& config) {
    if (const char* mode = std::getenv("ACTEVAL_BACKEND")) {
        if (std::string(mode) != "live" && std::string(mode) != "scripted") {
            throw ConfigError("ACTEVAL_BACKEND must be \"live\" or \"scripted\"");
        }
        config.backend_mode = mode;
    }
    if (const char* work = std::getenv("ACTEVAL_WORK_DIR")) config.work_dir = work;
    if (const char* key = std::getenv("ACTEVAL_API_KEY")) config.backend.api_key = key;
}

void apply_overrides(ToolConfig& config, const Overrides& overrides) {
    if (overrides.backend_mode) {
        if (*overrides.backend_mode != "live" && *overrides.backend_mode != "scripted") {
            throw ConfigError("--backend must be \"live\" or \"scripted\"");
        }
        config.backend_mode = *overrides.backend_mode;
    }
    if (overrides.work_dir) config.work_dir = *overrides.work_dir;
}

}  // namespace

ToolConfig default_config(const Overrides& overrides) {
    ToolConfig config;
    apply_environment(config);
    apply_overrides(config, overrides);
    return config;
}

ToolConfig load_config(const fs::path& path, const Overrides& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file: " + path.string());
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");
    reject_unknown_keys(root,
                        {"backend", "prompts", "known_external", "work_dir", "metrics",
                         "campaign", "scenarios"},
                        "config root");

    const fs::path base_dir = fs::absolute(path).parent_path();
    ToolConfig config;

    if (root.contains("backend")) {
        apply_backend_section(root.at("backend"), config.backend, config.backend_mode);
    }
    if (root.contains("prompts")) apply_prompts_section(root.at("prompts"), config.templates);
    if (root.contains("known_external")) {
        config.known_external_file =
            resolve_existing(base_dir, root.at("known_external").get<std::string>(),
                             "known_external table");
    }
    if (root.contains("work_dir")) {
        config.work_dir = resolve(base_dir, root.at("work_dir").get<std::string>());
    }
    if (root.contains("metrics")) apply_metrics_section(root.at("metrics"), config.metric_options);
    if (root.contains("campaign")) apply_campaign_section(root.at("campaign"), config.campaign);
    if (root.contains("scenarios")) {
        for (const auto& entry : root.at("scenarios")) {
            config.scenarios.push_back(parse_scenario(entry, base_dir));
        }
        for (size_t i = 0; i < config.scenarios.size(); ++i) {
            for (size_t j = i + 1; j < config.scenarios.size(); ++j) {
                if (config.scenarios[i].id == config.scenarios[j].id) {
                    throw ConfigError("duplicate scenario id: " + config.scenarios[i].id);
                }
            }
        }
    }

    apply_environment(config);
    apply_overrides(config, overrides);
    return config;
}

const ScenarioConfig* find_scenario(const ToolConfig& config, const std::string& id) {
    for (const auto& scenario : config.scenarios) {
        if (scenario.id == id) return &scenario;
    }
    return nullptr;
}

harness::BenchmarkScenario instantiate_scenario(const ToolConfig& config,
                                                const ScenarioConfig& scenario) {
    harness::BenchmarkScenario bench;
    bench.id = scenario.id;
    bench.fixture_root = scenario.fixture_root;
    bench.criteria = prompt::load_criteria_file(scenario.criteria_file);
    if (scenario.feature_file) {
        std::ifstream in(*scenario.feature_file, std::ios::binary);
        if (!in) throw IoError("cannot read feature file: " + scenario.feature_file->string());
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        auto parsed = gherkin::parse_gherkin(text);
        if (!parsed.ok()) {
            std::string detail;
            for (const auto& error : parsed.errors) {
                if (!detail.empty()) detail += "; ";
                detail += error.message;
            }
            throw ConfigError("feature file " + scenario.feature_file->string() +
                              " does not parse: " + detail);
        }
        bench.gherkin_doc = *parsed.document;
    }
    bench.runner.command_template = scenario.runner_command;
    bench.runner.timeout = scenario.timeout.value_or(config.campaign.timeout);
    bench.runner.env = scenario.runner_env;
    bench.coverage_target = scenario.coverage_target;
    bench.corpus_file = scenario.corpus_file;
    return bench;
}

}  // namespace acteval::config

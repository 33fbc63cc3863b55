#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "acteval/gateway.hpp"
#include "acteval/gherkin.hpp"
#include "acteval/prompt.hpp"
#include "acteval/records.hpp"
#include "acteval/testrun.hpp"

namespace acteval::harness {

struct BenchmarkScenario {
    std::string id;
    std::filesystem::path fixture_root;
    std::vector<prompt::AcceptanceCriterion> criteria;
    std::optional<gherkin::GherkinDocument> gherkin_doc;  // required for GS style
    testrun::RunnerAdapterConfig runner;
    std::string coverage_target;  // relative to fixture_root
    std::optional<std::filesystem::path> corpus_file;
};

enum class BackendMode { Live, Scripted };

struct CampaignSpec {
    BenchmarkScenario scenario;
    prompt::PromptStyle style{prompt::PromptStyle::NaturalLanguage};
    int n_trials = 100;
    int parallelism = 1;
    BackendMode backend{BackendMode::Scripted};
    gateway::BackendConfig backend_config;  // live mode only
    prompt::PromptTemplates templates;
    std::map<std::string, std::string> known_external;
    std::filesystem::path work_dir;
    std::filesystem::path campaign_file;  // JSONL output
    bool keep_failures = false;
};

// Shared per-campaign machinery: scripted corpus or HTTP backend, the repair
// manifest, and the packed fixture context.
class CampaignRuntime {
  public:
    explicit CampaignRuntime(const CampaignSpec& spec);

    const CampaignSpec& spec() const { return spec_; }
    const postprocess::ProjectManifest& manifest() const { return manifest_; }
    const prompt::PromptBundle& bundle() const { return bundle_; }
    const std::string& prompt_digest() const { return digest_; }

    std::string fetch_response(int trial_index);

  private:
    CampaignSpec spec_;
    postprocess::ProjectManifest manifest_;
    prompt::PromptBundle bundle_;
    std::string digest_;
    std::unique_ptr<gateway::ScriptedBackend> scripted_;
    std::unique_ptr<gateway::HttpBackend> live_;
};

// Full pipeline for one trial: prompt, backend, extraction, pre-repair run,
// repair, post-repair run, classification. Infrastructure faults come back as
// Harness-class records, never exceptions.
records::TrialRecord run_trial(CampaignRuntime& runtime, int trial_index);

// Runs missing trials 0..n-1 on a worker pool, appends records to the
// campaign file sorted by index, and returns the full record set (existing
// plus new). Concurrent invocations are rejected via a lock file.
std::vector<records::TrialRecord> run_campaign(
    const CampaignSpec& spec,
    const std::function<void(const records::TrialRecord&)>& progress = nullptr);

}  // namespace acteval::harness

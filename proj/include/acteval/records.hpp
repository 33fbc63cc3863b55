#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "acteval/postprocess.hpp"
#include "acteval/prompt.hpp"
#include "acteval/testrun.hpp"

namespace acteval::records {

inline constexpr int kSchemaVersion = 1;

struct StageOutcome {
    testrun::RunResult run;
    postprocess::FailureClass failure{postprocess::FailureClass::Harness};
};

// One trial of a campaign, persisted as one JSONL line.
struct TrialRecord {
    std::string scenario;
    prompt::PromptStyle style{prompt::PromptStyle::NaturalLanguage};
    int trial_index = 0;
    std::string prompt_digest;
    std::string raw_response;
    postprocess::GeneratedArtifact artifact;  // artifact.raw == raw_response
    StageOutcome pre_repair;
    std::vector<postprocess::RepairAction> actions;
    StageOutcome post_repair;
    std::optional<testrun::CoverageReading> coverage;  // post-repair run
    std::string started_at;
    std::string finished_at;
};

std::string record_to_line(const TrialRecord& record);
TrialRecord record_from_line(const std::string& line);  // throws on bad schema

// Appends one record (single line + newline, flushed).
void append_record(const std::filesystem::path& campaign_file, const TrialRecord& record);

// Loads every record, sorted by trial_index. Malformed lines raise IoError
// naming the 1-based line number.
std::vector<TrialRecord> load_records(const std::filesystem::path& campaign_file);

// Indices already persisted for (scenario, style); powers campaign resume.
std::set<int> existing_indices(const std::filesystem::path& campaign_file,
                               const std::string& scenario, prompt::PromptStyle style);

// Record with timestamps and durations blanked, for byte-identity comparison
// of repeated deterministic campaigns.
TrialRecord canonicalized(TrialRecord record);
std::string canonical_dump(const std::vector<TrialRecord>& sorted_records);

// O_EXCL-based guard against two processes appending to one campaign file.
class CampaignLock {
  public:
    explicit CampaignLock(const std::filesystem::path& campaign_file);
    ~CampaignLock();
    CampaignLock(const CampaignLock&) = delete;
    CampaignLock& operator=(const CampaignLock&) = delete;

  private:
    std::filesystem::path lock_path_;
    bool held_ = false;
};

}  // namespace acteval::records

#include "acteval/records.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>

#include "acteval/errors.hpp"
#include "json.hpp"

namespace acteval::records {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json run_to_json(const testrun::RunResult& run) {
    json j;
    j["collected"] = run.collected;
    j["executed"] = run.executed;
    j["passed"] = run.passed;
    j["failed"] = run.failed;
    j["collection_error"] =
        run.collection_error ? json(*run.collection_error) : json(nullptr);
    j["runtime_errors"] = run.runtime_errors;
    j["duration_ms"] = run.duration.count();
    j["timed_out"] = run.timed_out;
    j["harness_error"] = run.harness_error ? json(*run.harness_error) : json(nullptr);
    return j;
}

testrun::RunResult run_from_json(const json& j) {
    testrun::RunResult run;
    run.collected = j.at("collected").get<int>();
    run.executed = j.at("executed").get<int>();
    run.passed = j.at("passed").get<int>();
    run.failed = j.at("failed").get<int>();
    if (!j.at("collection_error").is_null()) {
        run.collection_error = j.at("collection_error").get<std::string>();
    }
    run.runtime_errors = j.at("runtime_errors").get<std::vector<std::string>>();
    run.duration = std::chrono::milliseconds(j.at("duration_ms").get<long long>());
    run.timed_out = j.at("timed_out").get<bool>();
    if (!j.at("harness_error").is_null()) {
        run.harness_error = j.at("harness_error").get<std::string>();
    }
    return run;
}

json outcome_to_json(const StageOutcome& outcome) {
    json j = run_to_json(outcome.run);
    j["failure_class"] = postprocess::failure_class_name(outcome.failure);
    return j;
}

StageOutcome outcome_from_json(const json& j) {
    StageOutcome outcome;
    outcome.run = run_from_json(j);
    auto parsed = postprocess::failure_class_from(j.at("failure_class").get<std::string>());
    if (!parsed) {
        throw IoError("unknown failure class: " + j.at("failure_class").get<std::string>());
    }
    outcome.failure = *parsed;
    return outcome;
}

const char* repair_kind_name(postprocess::RepairKind kind) {
    switch (kind) {
        case postprocess::RepairKind::AddImport: return "add_import";
        case postprocess::RepairKind::AddPathBootstrap: return "add_path_bootstrap";
        case postprocess::RepairKind::RewriteModulePath: return "rewrite_module_path";
        case postprocess::RepairKind::SkippedNote: return "skipped_note";
    }
    return "skipped_note";
}

postprocess::RepairKind repair_kind_from(const std::string& name) {
    if (name == "add_import") return postprocess::RepairKind::AddImport;
    if (name == "add_path_bootstrap") return postprocess::RepairKind::AddPathBootstrap;
    if (name == "rewrite_module_path") return postprocess::RepairKind::RewriteModulePath;
    if (name == "skipped_note") return postprocess::RepairKind::SkippedNote;
    throw IoError("unknown repair kind: " + name);
}

}  // namespace

std::string record_to_line(const TrialRecord& record) {
    json j;
    j["schema"] = kSchemaVersion;
    j["scenario"] = record.scenario;
    j["style"] = prompt::style_name(record.style);
    j["trial_index"] = record.trial_index;
    j["prompt_digest"] = record.prompt_digest;
    j["raw_response"] = record.raw_response;

    json artifact;
    artifact["blocks"] = record.artifact.blocks;
    artifact["languages"] = record.artifact.languages;
    artifact["prose"] = record.artifact.prose;
    artifact["chosen"] = record.artifact.chosen;
    j["artifact"] = artifact;

    j["pre_repair"] = outcome_to_json(record.pre_repair);

    json actions = json::array();
    for (const auto& action : record.actions) {
        actions.push_back({{"kind", repair_kind_name(action.kind)},
                           {"detail", action.detail},
                           {"inserted_text", action.inserted_text}});
    }
    j["actions"] = actions;

    j["post_repair"] = outcome_to_json(record.post_repair);

    if (record.coverage) {
        j["coverage"] = {{"path", record.coverage->path},
                         {"lines_total", record.coverage->lines_total},
                         {"lines_hit", record.coverage->lines_hit},
                         {"percent", record.coverage->percent}};
    } else {
        j["coverage"] = nullptr;
    }
    j["started_at"] = record.started_at;
    j["finished_at"] = record.finished_at;
    return j.dump();
}

TrialRecord record_from_line(const std::string& line) {
    json j = json::parse(line);  // caller maps exceptions to line numbers
    if (!j.is_object() || j.value("schema", -1) != kSchemaVersion) {
        throw IoError("unsupported record schema");
    }
    TrialRecord record;
    record.scenario = j.at("scenario").get<std::string>();
    auto style = prompt::style_from(j.at("style").get<std::string>());
    if (!style) throw IoError("unknown prompt style: " + j.at("style").get<std::string>());
    record.style = *style;
    record.trial_index = j.at("trial_index").get<int>();
    record.prompt_digest = j.at("prompt_digest").get<std::string>();
    record.raw_response = j.at("raw_response").get<std::string>();

    const json& artifact = j.at("artifact");
    record.artifact.raw = record.raw_response;
    record.artifact.blocks = artifact.at("blocks").get<std::vector<std::string>>();
    record.artifact.languages = artifact.at("languages").get<std::vector<std::string>>();
    record.artifact.prose = artifact.at("prose").get<std::vector<std::string>>();
    record.artifact.chosen = artifact.at("chosen").get<int>();

    record.pre_repair = outcome_from_json(j.at("pre_repair"));
    for (const auto& action : j.at("actions")) {
        record.actions.push_back({repair_kind_from(action.at("kind").get<std::string>()),
                                  action.at("detail").get<std::string>(),
                                  action.at("inserted_text").get<std::string>()});
    }
    record.post_repair = outcome_from_json(j.at("post_repair"));

    if (!j.at("coverage").is_null()) {
        const json& cov = j.at("coverage");
        testrun::CoverageReading reading;
        reading.path = cov.at("path").get<std::string>();
        reading.lines_total = cov.at("lines_total").get<int>();
        reading.lines_hit = cov.at("lines_hit").get<int>();
        reading.percent = cov.at("percent").get<double>();
        record.coverage = reading;
    }
    record.started_at = j.at("started_at").get<std::string>();
    record.finished_at = j.at("finished_at").get<std::string>();
    return record;
}

void append_record(const fs::path& campaign_file, const TrialRecord& record) {
    std::ofstream out(campaign_file, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot open campaign file for append: " + campaign_file.string());
    out << record_to_line(record) << "\n";
    out.flush();
    if (!out) throw IoError("write failed: " + campaign_file.string());
}

std::vector<TrialRecord> load_records(const fs::path& campaign_file) {
    std::ifstream in(campaign_file, std::ios::binary);
    if (!in) throw IoError("cannot read campaign file: " + campaign_file.string());
    std::vector<TrialRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_line(line));
        } catch (const nlohmann::json::exception& e) {
            throw IoError(campaign_file.string() + ":" + std::to_string(line_no) +
                          ": malformed record: " + e.what());
        } catch (const IoError& e) {
            throw IoError(campaign_file.string() + ":" + std::to_string(line_no) + ": " +
                          e.what());
        }
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const TrialRecord& a, const TrialRecord& b) {
                         return a.trial_index < b.trial_index;
                     });
    return records;
}

std::set<int> existing_indices(const fs::path& campaign_file, const std::string& scenario,
                               prompt::PromptStyle style) {
    std::set<int> indices;
    if (!fs::exists(campaign_file)) return indices;
    for (const auto& record : load_records(campaign_file)) {
        if (record.scenario == scenario && record.style == style) {
            indices.insert(record.trial_index);
        }
    }
    return indices;
}

TrialRecord canonicalized(TrialRecord record) {
    record.started_at.clear();
    record.finished_at.clear();
    record.pre_repair.run.duration = std::chrono::milliseconds(0);
    record.post_repair.run.duration = std::chrono::milliseconds(0);
    return record;
}

std::string canonical_dump(const std::vector<TrialRecord>& sorted_records) {
    std::string out;
    for (const auto& record : sorted_records) {
        out += record_to_line(canonicalized(record));
        out += "\n";
    }
    return out;
}

CampaignLock::CampaignLock(const fs::path& campaign_file)
    : lock_path_(campaign_file.string() + ".lock") {
    int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw IoError("campaign already in progress (lock file " + lock_path_.string() +
                      " exists)");
    }
    ::close(fd);
    held_ = true;
}

CampaignLock::~CampaignLock() {
    if (held_) {
        std::error_code ec;
        fs::remove(lock_path_, ec);
    }
}

}  // namespace acteval::records

// Regenerates the bundled benchmark campaign fixtures: two deterministic
// JSONL campaigns whose summaries land on fixed reference numbers, plus the
// rendered reports. Run from the repository root; pass an output directory
// to override fixtures/reports.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "acteval/metrics.hpp"
#include "acteval/postprocess.hpp"
#include "acteval/records.hpp"
#include "acteval/testrun.hpp"
#include "acteval/util.hpp"

namespace fs = std::filesystem;
using namespace acteval;

namespace {

constexpr const char* kScenario = "demo_project";

// Distribution of one campaign: how many records in total, how many of them
// execute, how many pass, and the coverage readings shared by the executable
// records (as exact hit/total pairs so the percentages are round numbers).
struct CampaignShape {
    prompt::PromptStyle style;
    int n_files;
    int n_executable;
    int n_passing;
    int cov_low_count;
    int cov_low_hit, cov_low_total;
    int cov_high_count;
    int cov_high_hit, cov_high_total;
    int cov_mid_hit, cov_mid_total;  // single middle reading
};

records::TrialRecord base_record(const CampaignShape& shape, int index) {
    records::TrialRecord record;
    record.scenario = kScenario;
    record.style = shape.style;
    record.trial_index = index;
    std::string raw =
        "Here is a pytest suite for the acceptance criteria.\n"
        "```python\nimport demo\n\n\ndef test_behavior():\n    assert demo.run() == 42\n```\n";
    record.raw_response = raw;
    record.artifact = postprocess::extract_code(raw);
    record.prompt_digest =
        fnv1a_hex(kScenario + std::string("|") + prompt::style_name(shape.style) + "|" +
                  std::to_string(index));
    record.started_at = "2026-08-17T00:00:00Z";
    record.finished_at = "2026-08-17T00:00:02Z";

    // Every trial starts with an unresolved import that the repair pass fixes.
    record.pre_repair.run.collected = 0;
    record.pre_repair.run.executed = 0;
    record.pre_repair.run.collection_error = "ModuleNotFoundError: No module named 'demo'";
    record.pre_repair.run.duration = std::chrono::milliseconds(180);
    record.pre_repair.failure = postprocess::FailureClass::Dependency;
    record.actions.push_back({postprocess::RepairKind::AddPathBootstrap,
                              "module search path -> ../project",
                              "# --- path bootstrap ---\n"});
    return record;
}

void fill_post(records::TrialRecord& record, bool executable, bool passing,
               int semantic_modulo) {
    auto& run = record.post_repair.run;
    run.duration = std::chrono::milliseconds(240);
    if (!executable) {
        run.collected = 0;
        run.executed = 0;
        if (record.trial_index % semantic_modulo == 0) {
            run.collection_error = "SyntaxError: invalid syntax";
            record.post_repair.failure = postprocess::FailureClass::Semantic;
        } else {
            run.collection_error = "ImportError: cannot import name 'helper'";
            record.post_repair.failure = postprocess::FailureClass::Dependency;
        }
        return;
    }
    run.collected = 2;
    run.executed = 2;
    if (passing) {
        run.passed = 2;
        run.failed = 0;
    } else {
        run.passed = 0;
        run.failed = 2;
        run.runtime_errors = {"AssertionError"};
    }
    record.post_repair.failure = postprocess::FailureClass::None;
}

void write_campaign(const fs::path& out, const CampaignShape& shape) {
    fs::remove(out);
    int executable_seen = 0;
    for (int i = 0; i < shape.n_files; ++i) {
        records::TrialRecord record = base_record(shape, i);
        // Spread the non-executable trials through the file instead of
        // bunching them at one end.
        const bool executable =
            shape.n_executable == shape.n_files ||
            (i * shape.n_executable) / shape.n_files !=
                ((i + 1) * shape.n_executable) / shape.n_files;
        const bool passing = executable && executable_seen < shape.n_passing;
        fill_post(record, executable, passing, 3);
        if (executable) {
            int hit, total;
            if (executable_seen < shape.cov_low_count) {
                hit = shape.cov_low_hit;
                total = shape.cov_low_total;
            } else if (executable_seen < shape.cov_low_count + shape.cov_high_count) {
                hit = shape.cov_high_hit;
                total = shape.cov_high_total;
            } else {
                hit = shape.cov_mid_hit;
                total = shape.cov_mid_total;
            }
            record.coverage = testrun::make_coverage("project/demo.py", total, hit);
            ++executable_seen;
        }
        records::append_record(out, record);
    }
    if (executable_seen != shape.n_executable) {
        throw std::runtime_error("campaign shape mismatch for " + out.string());
    }
}

}  // namespace

int main(int argc, char** argv) {
    fs::path out_dir = argc > 1 ? argv[1] : "fixtures/reports";
    fs::create_directories(out_dir);

    CampaignShape nl{prompt::PromptStyle::NaturalLanguage,
                     100, 71, 15,
                     35, 1331, 2500,   // 53.24 %
                     35, 1828, 2500,   // 73.12 %
                     3159, 5000};      // 63.18 %
    CampaignShape gs{prompt::PromptStyle::GherkinStructured,
                     365, 357, 353,
                     178, 1023, 2000,  // 51.15 %
                     178, 7411, 10000, // 74.11 %
                     6263, 10000};     // 62.63 %

    write_campaign(out_dir / "table1_nl.jsonl", nl);
    write_campaign(out_dir / "table1_gs.jsonl", gs);

    auto nl_records = records::load_records(out_dir / "table1_nl.jsonl");
    auto gs_records = records::load_records(out_dir / "table1_gs.jsonl");
    metrics::MetricOptions options;
    auto nl_summary = metrics::summarize(nl_records, metrics::Stage::PostRepair, options);
    auto gs_summary = metrics::summarize(gs_records, metrics::Stage::PostRepair, options);

    std::ofstream report(out_dir / "table1_report.md");
    report << metrics::render_report({nl_summary, gs_summary},
                                     metrics::ReportFormat::Markdown);
    std::ofstream diff(out_dir / "table1_diff.md");
    diff << metrics::render_diff(metrics::diff_summaries(nl_summary, gs_summary),
                                 metrics::ReportFormat::Markdown);

    std::cout << "wrote " << (out_dir / "table1_nl.jsonl").string() << " ("
              << nl_records.size() << " records)\n";
    std::cout << "wrote " << (out_dir / "table1_gs.jsonl").string() << " ("
              << gs_records.size() << " records)\n";
    std::cout << metrics::render_report({nl_summary, gs_summary},
                                        metrics::ReportFormat::Markdown);
    return 0;
}

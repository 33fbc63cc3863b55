#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "acteval/records.hpp"

namespace acteval::metrics {

enum class Stage { PreRepair, PostRepair };
const char* stage_name(Stage stage);
std::optional<Stage> stage_from(const std::string& name);

enum class PassRateDenominator { AllFiles, ExecutableOnly };
enum class StdConvention { Sample, Population };

struct MetricOptions {
    PassRateDenominator denominator{PassRateDenominator::AllFiles};
    StdConvention std_convention{StdConvention::Sample};
};

struct CampaignSummary {
    std::string scenario;
    prompt::PromptStyle style{prompt::PromptStyle::NaturalLanguage};
    Stage stage{Stage::PostRepair};
    int n_files = 0;
    int n_executable = 0;
    int n_passing = 0;
    double executable_pct = 0.0;
    double pass_rate_pct = 0.0;
    // Coverage over executable files that carry a reading; absent when none.
    std::optional<double> coverage_mean;
    std::optional<double> coverage_std;  // 0.0 for a single reading
    int coverage_n = 0;
    std::map<postprocess::FailureClass, int> failure_breakdown;
};

// Aggregates one homogeneous campaign. Throws EmptyRecordsError and
// MixedCampaignError. Coverage readings belong to the post-repair run, so
// pre-repair summaries always report coverage as undefined.
CampaignSummary summarize(const std::vector<records::TrialRecord>& records, Stage stage,
                          const MetricOptions& options = {});

enum class ReportFormat { Markdown, Csv };

// One row per metric, one column per summary, coverage as "mean ± std" with
// two decimals; undefined coverage renders as "—".
std::string render_report(const std::vector<CampaignSummary>& summaries, ReportFormat format);

struct DiffReport {
    std::string scenario;
    Stage stage{Stage::PostRepair};
    prompt::PromptStyle style_a;
    prompt::PromptStyle style_b;
    double executable_delta = 0.0;  // b - a
    double pass_rate_delta = 0.0;
    std::optional<double> coverage_mean_delta;
    int larger_executable = 0;  // -1 when a leads, +1 when b leads, 0 tie
};

// Signed differences b − a; throws ScenarioMismatchError when scenario or
// stage differ.
DiffReport diff_summaries(const CampaignSummary& a, const CampaignSummary& b);

std::string render_diff(const DiffReport& diff, ReportFormat format);

// Human-readable column heading for a prompt style.
std::string style_label(prompt::PromptStyle style);

}  // namespace acteval::metrics

#include "acteval/metrics.hpp"

#include <cmath>
#include <sstream>

#include "acteval/errors.hpp"
#include "acteval/util.hpp"

namespace acteval::metrics {

const char* stage_name(Stage stage) {
    return stage == Stage::PreRepair ? "pre-repair" : "post-repair";
}

std::optional<Stage> stage_from(const std::string& name) {
    if (name == "pre-repair" || name == "pre") return Stage::PreRepair;
    if (name == "post-repair" || name == "post") return Stage::PostRepair;
    return std::nullopt;
}

std::string style_label(prompt::PromptStyle style) {
    return style == prompt::PromptStyle::NaturalLanguage ? "NL" : "Gherkin";
}

CampaignSummary summarize(const std::vector<records::TrialRecord>& records, Stage stage,
                          const MetricOptions& options) {
    if (records.empty()) throw EmptyRecordsError();

    CampaignSummary summary;
    summary.scenario = records.front().scenario;
    summary.style = records.front().style;
    summary.stage = stage;
    summary.n_files = static_cast<int>(records.size());

    std::vector<double> coverage;
    for (const auto& record : records) {
        if (record.scenario != summary.scenario || record.style != summary.style) {
            throw MixedCampaignError(summary.scenario + "/" +
                                     prompt::style_name(summary.style) + " vs " +
                                     record.scenario + "/" +
                                     prompt::style_name(record.style));
        }
        const records::StageOutcome& outcome =
            stage == Stage::PreRepair ? record.pre_repair : record.post_repair;
        const bool executable = outcome.run.executed >= 1;
        if (executable) ++summary.n_executable;
        if (executable && outcome.run.passed >= 1) ++summary.n_passing;
        summary.failure_breakdown[outcome.failure] += 1;
        if (stage == Stage::PostRepair && executable && record.coverage) {
            coverage.push_back(record.coverage->percent);
        }
    }

    summary.executable_pct = 100.0 * summary.n_executable / summary.n_files;
    const int denominator = options.denominator == PassRateDenominator::AllFiles
                                ? summary.n_files
                                : summary.n_executable;
    summary.pass_rate_pct =
        denominator == 0 ? 0.0 : 100.0 * summary.n_passing / denominator;

    summary.coverage_n = static_cast<int>(coverage.size());
    if (!coverage.empty()) {
        double sum = 0.0;
        for (double v : coverage) sum += v;
        const double mean = sum / coverage.size();
        summary.coverage_mean = mean;
        double sq = 0.0;
        for (double v : coverage) sq += (v - mean) * (v - mean);
        if (coverage.size() == 1) {
            summary.coverage_std = 0.0;
        } else if (options.std_convention == StdConvention::Sample) {
            summary.coverage_std = std::sqrt(sq / (coverage.size() - 1));
        } else {
            summary.coverage_std = std::sqrt(sq / coverage.size());
        }
    }
    return summary;
}

namespace {

std::string coverage_cell(const CampaignSummary& summary) {
    if (!summary.coverage_mean) return "—";
    return format_fixed(*summary.coverage_mean, 2) + " ± " +
           format_fixed(summary.coverage_std.value_or(0.0), 2);
}

std::string signed_fixed(double value) {
    std::string body = format_fixed(value, 2);
    if (value >= 0 && body[0] != '-') return "+" + body;
    return body;
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    out << "|";
    for (const auto& cell : header) out << " " << cell << " |";
    out << "\n|";
    for (size_t i = 0; i < header.size(); ++i) out << " --- |";
    out << "\n";
    for (const auto& row : rows) {
        out << "|";
        for (const auto& cell : row) out << " " << cell << " |";
        out << "\n";
    }
    return out.str();
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream out;
    out << join(header, ",") << "\n";
    for (const auto& row : rows) out << join(row, ",") << "\n";
    return out.str();
}

}  // namespace

std::string render_report(const std::vector<CampaignSummary>& summaries, ReportFormat format) {
    if (summaries.empty()) throw EmptyRecordsError();

    std::vector<std::string> header = {"Metric"};
    for (const auto& summary : summaries) header.push_back(style_label(summary.style));

    std::vector<std::vector<std::string>> rows(3);
    rows[0] = {"Executable (%)"};
    rows[1] = {"Pass Rate (%)"};
    rows[2] = {"Coverage (%)"};
    for (const auto& summary : summaries) {
        rows[0].push_back(format_fixed(summary.executable_pct, 2));
        rows[1].push_back(format_fixed(summary.pass_rate_pct, 2));
        rows[2].push_back(coverage_cell(summary));
    }
    return format == ReportFormat::Markdown ? markdown_table(header, rows)
                                            : csv_table(header, rows);
}

DiffReport diff_summaries(const CampaignSummary& a, const CampaignSummary& b) {
    if (a.scenario != b.scenario) {
        throw ScenarioMismatchError(a.scenario + " vs " + b.scenario);
    }
    if (a.stage != b.stage) {
        throw ScenarioMismatchError(std::string("stage ") + stage_name(a.stage) + " vs " +
                                    stage_name(b.stage));
    }
    DiffReport diff;
    diff.scenario = a.scenario;
    diff.stage = a.stage;
    diff.style_a = a.style;
    diff.style_b = b.style;
    diff.executable_delta = b.executable_pct - a.executable_pct;
    diff.pass_rate_delta = b.pass_rate_pct - a.pass_rate_pct;
    if (a.coverage_mean && b.coverage_mean) {
        diff.coverage_mean_delta = *b.coverage_mean - *a.coverage_mean;
    }
    if (b.executable_pct > a.executable_pct) diff.larger_executable = 1;
    else if (b.executable_pct < a.executable_pct) diff.larger_executable = -1;
    return diff;
}

std::string render_diff(const DiffReport& diff, ReportFormat format) {
    const std::string pair =
        style_label(diff.style_b) + " - " + style_label(diff.style_a);
    std::vector<std::string> header = {"Metric", pair};
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Executable (%)", signed_fixed(diff.executable_delta)});
    rows.push_back({"Pass Rate (%)", signed_fixed(diff.pass_rate_delta)});
    rows.push_back({"Coverage (%)", diff.coverage_mean_delta
                                        ? signed_fixed(*diff.coverage_mean_delta)
                                        : std::string("—")});
    std::string lead;
    if (diff.larger_executable > 0) lead = style_label(diff.style_b);
    else if (diff.larger_executable < 0) lead = style_label(diff.style_a);
    else lead = "tie";

    std::string table = format == ReportFormat::Markdown ? markdown_table(header, rows)
                                                         : csv_table(header, rows);
    return table + (format == ReportFormat::Markdown
                        ? "\nHigher executable rate: " + lead + "\n"
                        : "higher_executable," + lead + "\n");
}

}  // namespace acteval::metrics

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acteval/config.hpp"
#include "acteval/errors.hpp"
#include "acteval/gateway.hpp"
#include "acteval/gherkin.hpp"
#include "acteval/harness.hpp"
#include "acteval/metrics.hpp"
#include "acteval/postprocess.hpp"
#include "acteval/prompt.hpp"
#include "acteval/records.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;   // usage or data errors
constexpr int kExitParse = 2;   // unparseable Gherkin
constexpr int kExitBackend = 3; // backend failures

namespace fs = std::filesystem;
using namespace acteval;

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

struct GlobalOptions {
    std::string config_path;
    std::string backend_mode;
    std::string work_dir;
    bool keep_failures = false;
};

config::ToolConfig load_tool_config(const GlobalOptions& global) {
    config::Overrides overrides;
    if (!global.backend_mode.empty()) overrides.backend_mode = global.backend_mode;
    if (!global.work_dir.empty()) overrides.work_dir = global.work_dir;
    if (global.config_path.empty()) return config::default_config(overrides);
    return config::load_config(global.config_path, overrides);
}

void print_findings(const std::vector<gherkin::LintFinding>& findings) {
    for (const auto& finding : findings) {
        std::cout << (finding.severity == gherkin::LintSeverity::Error ? "error" : "warning")
                  << " " << finding.code << ": " << finding.message;
        if (finding.line > 0) std::cout << " (line " << finding.line << ")";
        std::cout << "\n";
    }
}

metrics::ReportFormat format_from(const std::string& name) {
    if (name == "csv") return metrics::ReportFormat::Csv;
    return metrics::ReportFormat::Markdown;
}

// ---- gen-gherkin ----

int cmd_gen_gherkin(const GlobalOptions& global, const std::string& criteria_path,
                    const std::string& reference_path, const std::string& out_path,
                    const std::string& corpus_path, const std::string& corpus_key,
                    int trial) {
    config::ToolConfig cfg = load_tool_config(global);
    auto criteria = prompt::load_criteria_file(criteria_path);

    prompt::ContextFile reference;
    reference.virtual_path = fs::path(reference_path).filename().string();
    reference.content = read_text_file(reference_path);
    reference.kind = prompt::ContextKind::ReferenceDoc;

    prompt::PromptBundle bundle =
        prompt::build_gherkin_gen_prompt(criteria, reference, cfg.templates);

    gateway::CompletionRequest request;
    request.model = cfg.backend.model;
    request.messages = gateway::encode_bundle(bundle, cfg.templates.system_preamble);

    std::string response;
    if (cfg.backend_mode == "scripted") {
        if (corpus_path.empty()) {
            std::cerr << "error: --corpus is required with the scripted backend\n";
            return kExitUsage;
        }
        auto scripted = gateway::ScriptedBackend::load(corpus_path);
        response =
            scripted.complete_scripted(request, {corpus_key, "gen", trial}).content;
    } else {
        gateway::HttpBackend backend(cfg.backend);
        response = backend.complete(request).content;
    }

    // The reply is expected to be a bare feature; a fenced reply is unwrapped.
    std::string candidate = response;
    auto parsed = gherkin::parse_gherkin(candidate);
    if (!parsed.ok() && response.find("```") != std::string::npos) {
        auto artifact = postprocess::extract_code(response);
        candidate = artifact.chosen_block();
        parsed = gherkin::parse_gherkin(candidate);
    }
    if (!parsed.ok()) {
        const fs::path raw_path = fs::path(out_path).string() + ".raw";
        write_text_file(raw_path, response);
        std::cerr << "error: model output is not valid Gherkin (raw response saved to "
                  << raw_path.string() << ")\n";
        for (const auto& error : parsed.errors) {
            std::cerr << "  line " << error.line << " " << error.code << ": "
                      << error.message << "\n";
        }
        return kExitParse;
    }

    write_text_file(out_path, candidate);
    std::cout << "wrote " << out_path << " (" << parsed.document->feature.scenarios.size()
              << " scenarios)\n";
    print_findings(gherkin::validate(*parsed.document));
    return kExitOk;
}

// ---- gen-tests ----

int cmd_gen_tests(const GlobalOptions& global, const std::string& scenario_id,
                  const std::string& style_name, int n_trials, int parallelism,
                  const std::string& out_path) {
    config::ToolConfig cfg = load_tool_config(global);
    const config::ScenarioConfig* scenario = config::find_scenario(cfg, scenario_id);
    if (!scenario) {
        std::cerr << "error: unknown scenario \"" << scenario_id << "\"; available:";
        for (const auto& s : cfg.scenarios) std::cerr << " " << s.id;
        std::cerr << "\n";
        return kExitUsage;
    }
    auto style = prompt::style_from(style_name);
    if (!style) {
        std::cerr << "error: style must be nl or gs\n";
        return kExitUsage;
    }

    harness::CampaignSpec spec;
    spec.scenario = config::instantiate_scenario(cfg, *scenario);
    spec.style = *style;
    spec.n_trials = n_trials > 0 ? n_trials : cfg.campaign.n_trials;
    spec.parallelism = parallelism > 0 ? parallelism : cfg.campaign.parallelism;
    spec.backend = cfg.backend_mode == "live" ? harness::BackendMode::Live
                                              : harness::BackendMode::Scripted;
    spec.backend_config = cfg.backend;
    spec.templates = cfg.templates;
    if (cfg.known_external_file) {
        spec.known_external = postprocess::load_known_external(*cfg.known_external_file);
    }
    spec.work_dir = cfg.work_dir;
    spec.campaign_file = out_path.empty()
                             ? cfg.work_dir / (scenario_id + "_" + style_name + ".jsonl")
                             : fs::path(out_path);
    spec.keep_failures = global.keep_failures;

    auto progress = [](const records::TrialRecord& record) {
        std::cout << "trial " << record.trial_index << ": "
                  << postprocess::failure_class_name(record.post_repair.failure)
                  << " executed=" << record.post_repair.run.executed
                  << " passed=" << record.post_repair.run.passed << "\n";
    };
    auto all = harness::run_campaign(spec, progress);

    std::cout << "\ncampaign file: " << spec.campaign_file.string() << "\n";
    auto summary = metrics::summarize(all, metrics::Stage::PostRepair, cfg.metric_options);
    std::cout << metrics::render_report({summary}, metrics::ReportFormat::Markdown);
    return kExitOk;
}

// ---- eval ----

int cmd_eval(const GlobalOptions& global, const std::vector<std::string>& campaign_files,
             const std::string& stage_name, const std::string& format,
             const std::string& out_path) {
    config::ToolConfig cfg = load_tool_config(global);
    auto stage = metrics::stage_from(stage_name);
    if (!stage) {
        std::cerr << "error: --stage must be pre or post\n";
        return kExitUsage;
    }
    std::vector<metrics::CampaignSummary> summaries;
    for (const auto& file : campaign_files) {
        auto records = records::load_records(file);
        summaries.push_back(metrics::summarize(records, *stage, cfg.metric_options));
    }
    std::string report = metrics::render_report(summaries, format_from(format));
    if (out_path.empty()) std::cout << report;
    else write_text_file(out_path, report);
    return kExitOk;
}

// ---- validate-gherkin ----

int cmd_validate_gherkin(const std::string& feature_path) {
    std::string text = read_text_file(feature_path);
    auto parsed = gherkin::parse_gherkin(text);
    if (!parsed.ok()) {
        for (const auto& error : parsed.errors) {
            std::cerr << feature_path << ":" << error.line << " " << error.code << ": "
                      << error.message << "\n";
        }
        return kExitParse;
    }
    auto findings = gherkin::validate(*parsed.document);
    print_findings(findings);
    if (findings.empty()) std::cout << "no findings\n";
    return gherkin::has_error_finding(findings) ? kExitUsage : kExitOk;
}

// ---- report-diff ----

int cmd_report_diff(const GlobalOptions& global, const std::string& file_a,
                    const std::string& file_b, const std::string& stage_name,
                    const std::string& format) {
    config::ToolConfig cfg = load_tool_config(global);
    auto stage = metrics::stage_from(stage_name);
    if (!stage) {
        std::cerr << "error: --stage must be pre or post\n";
        return kExitUsage;
    }
    auto summary_a =
        metrics::summarize(records::load_records(file_a), *stage, cfg.metric_options);
    auto summary_b =
        metrics::summarize(records::load_records(file_b), *stage, cfg.metric_options);
    auto diff = metrics::diff_summaries(summary_a, summary_b);
    std::cout << metrics::render_diff(diff, format_from(format));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance-criteria test generation and evaluation pipeline"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "Path to the tool config file");
    app.add_option("--backend", global.backend_mode, "Backend mode: live or scripted")
        ->check(CLI::IsMember({"live", "scripted"}));
    app.add_option("--work-dir", global.work_dir, "Sandbox and campaign directory");
    app.add_flag("--keep-failures", global.keep_failures,
                 "Retain sandboxes of failing trials");

    // gen-gherkin
    auto* gen_gherkin = app.add_subcommand(
        "gen-gherkin", "Generate a .feature file from acceptance criteria");
    std::string gg_criteria, gg_reference, gg_out = "generated.feature";
    std::string gg_corpus, gg_key = "gherkin_gen";
    int gg_trial = 0;
    gen_gherkin->add_option("--criteria", gg_criteria, "Criteria JSON file")->required();
    gen_gherkin->add_option("--reference", gg_reference, "Gherkin reference document")
        ->required();
    gen_gherkin->add_option("--out", gg_out, "Output .feature path");
    gen_gherkin->add_option("--corpus", gg_corpus, "Scripted response corpus");
    gen_gherkin->add_option("--key", gg_key, "Scripted corpus scenario key");
    gen_gherkin->add_option("--trial", gg_trial, "Scripted corpus trial index");

    // gen-tests
    auto* gen_tests =
        app.add_subcommand("gen-tests", "Run a test-generation campaign for a scenario");
    std::string gt_scenario, gt_style, gt_out;
    int gt_trials = 0, gt_parallelism = 0;
    gen_tests->add_option("--scenario", gt_scenario, "Scenario id from the config")
        ->required();
    gen_tests->add_option("--style", gt_style, "Prompt style: nl or gs")->required();
    gen_tests->add_option("-n,--trials", gt_trials, "Number of trials");
    gen_tests->add_option("--parallelism", gt_parallelism, "Worker count");
    gen_tests->add_option("--out", gt_out, "Campaign JSONL path");

    // eval
    auto* eval = app.add_subcommand("eval", "Summarize campaign files into a report");
    std::vector<std::string> ev_files;
    std::string ev_stage = "post", ev_format = "markdown", ev_out;
    eval->add_option("files", ev_files, "Campaign JSONL files")->required();
    eval->add_option("--stage", ev_stage, "pre or post");
    eval->add_option("--format", ev_format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}));
    eval->add_option("--out", ev_out, "Write the report to a file");

    // validate-gherkin
    auto* validate =
        app.add_subcommand("validate-gherkin", "Parse and lint a .feature file");
    std::string vg_file;
    validate->add_option("file", vg_file, "Feature file")->required();

    // report-diff
    auto* diff = app.add_subcommand("report-diff", "Metric deltas between two campaigns");
    std::string rd_a, rd_b, rd_stage = "post", rd_format = "markdown";
    diff->add_option("a", rd_a, "Baseline campaign JSONL")->required();
    diff->add_option("b", rd_b, "Comparison campaign JSONL")->required();
    diff->add_option("--stage", rd_stage, "pre or post");
    diff->add_option("--format", rd_format, "markdown or csv")
        ->check(CLI::IsMember({"markdown", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen_gherkin->parsed()) {
            return cmd_gen_gherkin(global, gg_criteria, gg_reference, gg_out, gg_corpus,
                                   gg_key, gg_trial);
        }
        if (gen_tests->parsed()) {
            return cmd_gen_tests(global, gt_scenario, gt_style, gt_trials, gt_parallelism,
                                 gt_out);
        }
        if (eval->parsed()) return cmd_eval(global, ev_files, ev_stage, ev_format, ev_out);
        if (validate->parsed()) return cmd_validate_gherkin(vg_file);
        if (diff->parsed()) return cmd_report_diff(global, rd_a, rd_b, rd_stage, rd_format);
    } catch (const BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const Error& e) {
        std::cerr << "error (" << e.code() << "): " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <vector>

#include "acteval/errors.hpp"
#include "acteval/metrics.hpp"
#include "doctest.h"

using namespace acteval;
using namespace acteval::metrics;
using acteval::postprocess::FailureClass;
using acteval::records::TrialRecord;

namespace {

// executed/passed describe the post-repair run; cov < 0 means no reading.
TrialRecord make_record(int index, int executed, int passed, double cov,
                        FailureClass failure = FailureClass::None) {
    TrialRecord r;
    r.scenario = "demo";
    r.style = prompt::PromptStyle::NaturalLanguage;
    r.trial_index = index;
    r.prompt_digest = "digest";
    r.raw_response = "raw";
    r.artifact.raw = "raw";
    r.artifact.blocks = {"raw"};
    r.artifact.languages = {""};
    r.artifact.prose = {"", ""};

    r.pre_repair.run.collected = executed;
    r.pre_repair.run.executed = 0;
    r.pre_repair.run.collection_error = "ModuleNotFoundError";
    r.pre_repair.failure = FailureClass::Dependency;

    r.post_repair.run.collected = executed > 0 ? executed : 1;
    r.post_repair.run.executed = executed;
    r.post_repair.run.passed = passed;
    r.post_repair.run.failed = executed - passed;
    r.post_repair.failure = failure;
    if (executed > 0 && cov >= 0) {
        testrun::CoverageReading reading;
        reading.path = "proj/mod.py";
        reading.lines_total = 100;
        reading.lines_hit = static_cast<int>(cov);
        reading.percent = cov;
        r.coverage = reading;
    }
    return r;
}

}  // namespace

TEST_CASE("stage names") {
    CHECK(std::string(stage_name(Stage::PreRepair)) == "pre-repair");
    CHECK(std::string(stage_name(Stage::PostRepair)) == "post-repair");
    CHECK(stage_from("pre-repair") == Stage::PreRepair);
    CHECK(stage_from("post") == Stage::PostRepair);
    CHECK(stage_from("pre") == Stage::PreRepair);
    CHECK(!stage_from("mid").has_value());
}

TEST_CASE("five-record oracle: counts, percentages, coverage moments") {
    std::vector<TrialRecord> recs = {
        make_record(0, 1, 1, 40.0),
        make_record(1, 2, 1, 50.0),
        make_record(2, 1, 0, 50.0),
        make_record(3, 3, 3, 60.0),
        make_record(4, 0, 0, -1, FailureClass::Semantic),
    };
    auto s = summarize(recs, Stage::PostRepair);
    CHECK(s.scenario == "demo");
    CHECK(s.n_files == 5);
    CHECK(s.n_executable == 4);
    CHECK(s.n_passing == 3);
    CHECK(s.executable_pct == doctest::Approx(80.0).epsilon(1e-12));
    CHECK(s.pass_rate_pct == doctest::Approx(60.0).epsilon(1e-12));
    REQUIRE(s.coverage_mean.has_value());
    REQUIRE(s.coverage_std.has_value());
    CHECK(s.coverage_n == 4);
    CHECK(*s.coverage_mean == doctest::Approx(50.0).epsilon(1e-12));
    // sample variance of {40,50,50,60} is 200/3
    CHECK(*s.coverage_std == doctest::Approx(std::sqrt(200.0 / 3.0)).epsilon(1e-12));
    CHECK(s.failure_breakdown[FailureClass::Semantic] == 1);
    CHECK(s.failure_breakdown[FailureClass::None] == 4);
}

TEST_CASE("pre-repair stage reads the pre-repair run and hides coverage") {
    std::vector<TrialRecord> recs = {make_record(0, 1, 1, 80.0), make_record(1, 1, 0, 60.0)};
    auto s = summarize(recs, Stage::PreRepair);
    CHECK(s.n_executable == 0);
    CHECK(s.executable_pct == doctest::Approx(0.0));
    CHECK(!s.coverage_mean.has_value());
    CHECK(s.coverage_n == 0);
    CHECK(s.failure_breakdown[FailureClass::Dependency] == 2);
}

TEST_CASE("denominator option switches the pass-rate base") {
    std::vector<TrialRecord> recs = {
        make_record(0, 1, 1, -1),
        make_record(1, 1, 0, -1),
        make_record(2, 0, 0, -1, FailureClass::Semantic),
        make_record(3, 0, 0, -1, FailureClass::Semantic),
    };
    MetricOptions all;
    all.denominator = PassRateDenominator::AllFiles;
    CHECK(summarize(recs, Stage::PostRepair, all).pass_rate_pct ==
          doctest::Approx(25.0).epsilon(1e-12));
    MetricOptions exec_only;
    exec_only.denominator = PassRateDenominator::ExecutableOnly;
    CHECK(summarize(recs, Stage::PostRepair, exec_only).pass_rate_pct ==
          doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("std convention option") {
    std::vector<TrialRecord> recs = {
        make_record(0, 1, 1, 40.0),
        make_record(1, 1, 1, 60.0),
    };
    MetricOptions sample;
    sample.std_convention = StdConvention::Sample;
    auto s1 = summarize(recs, Stage::PostRepair, sample);
    CHECK(*s1.coverage_std == doctest::Approx(std::sqrt(200.0)).epsilon(1e-12));
    MetricOptions population;
    population.std_convention = StdConvention::Population;
    auto s2 = summarize(recs, Stage::PostRepair, population);
    CHECK(*s2.coverage_std == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("single coverage reading yields std 0.0, none yields undefined") {
    std::vector<TrialRecord> one = {make_record(0, 1, 1, 63.18)};
    auto s = summarize(one, Stage::PostRepair);
    REQUIRE(s.coverage_std.has_value());
    CHECK(*s.coverage_std == doctest::Approx(0.0));
    CHECK(s.coverage_n == 1);

    std::vector<TrialRecord> none = {make_record(0, 1, 1, -1)};
    auto s2 = summarize(none, Stage::PostRepair);
    CHECK(!s2.coverage_mean.has_value());
    CHECK(!s2.coverage_std.has_value());
}

TEST_CASE("summarize agrees with a brute-force recount on random campaigns") {
    std::mt19937 rng(99);
    for (int round = 0; round < 200; ++round) {
        int n = 1 + static_cast<int>(rng() % 500);
        std::vector<TrialRecord> recs;
        int executable = 0, passing = 0, cov_n = 0;
        double cov_sum = 0.0;
        std::vector<double> covs;
        for (int i = 0; i < n; ++i) {
            int executed = static_cast<int>(rng() % 3);  // 0..2
            int passed = executed > 0 ? static_cast<int>(rng() % (executed + 1)) : 0;
            double cov = (rng() % 4 == 0) ? -1.0 : static_cast<double>(rng() % 10000) / 100.0;
            recs.push_back(make_record(i, executed, passed, cov,
                                       executed > 0 ? FailureClass::None
                                                    : FailureClass::Semantic));
            if (executed >= 1) {
                ++executable;
                if (passed >= 1) ++passing;
                if (cov >= 0) {
                    ++cov_n;
                    cov_sum += cov;
                    covs.push_back(cov);
                }
            }
        }
        auto s = summarize(recs, Stage::PostRepair);
        CHECK(s.n_files == n);
        CHECK(s.n_executable == executable);
        CHECK(s.n_passing == passing);
        CHECK(s.executable_pct == doctest::Approx(100.0 * executable / n).epsilon(1e-9));
        CHECK(s.pass_rate_pct == doctest::Approx(100.0 * passing / n).epsilon(1e-9));
        CHECK(s.n_passing <= s.n_executable);
        CHECK(s.n_executable <= s.n_files);
        CHECK(s.coverage_n == cov_n);
        if (cov_n > 0) {
            double mean = cov_sum / cov_n;
            CHECK(*s.coverage_mean == doctest::Approx(mean).epsilon(1e-9));
            if (cov_n > 1) {
                double sq = 0.0;
                for (double c : covs) sq += (c - mean) * (c - mean);
                CHECK(*s.coverage_std ==
                      doctest::Approx(std::sqrt(sq / (cov_n - 1))).epsilon(1e-9));
            }
        } else {
            CHECK(!s.coverage_mean.has_value());
        }
    }
}

TEST_CASE("summarize input validation") {
    CHECK_THROWS_AS(summarize({}, Stage::PostRepair), EmptyRecordsError);

    auto a = make_record(0, 1, 1, -1);
    auto b = make_record(1, 1, 1, -1);
    b.scenario = "other";
    CHECK_THROWS_AS(summarize({a, b}, Stage::PostRepair), MixedCampaignError);

    auto c = make_record(1, 1, 1, -1);
    c.style = prompt::PromptStyle::GherkinStructured;
    CHECK_THROWS_AS(summarize({a, c}, Stage::PostRepair), MixedCampaignError);
}

TEST_CASE("report rendering: markdown cells, coverage format, undefined dash") {
    CampaignSummary nl;
    nl.scenario = "hello_world";
    nl.style = prompt::PromptStyle::NaturalLanguage;
    nl.stage = Stage::PostRepair;
    nl.n_files = 100;
    nl.n_executable = 71;
    nl.n_passing = 15;
    nl.executable_pct = 71.0;
    nl.pass_rate_pct = 15.0;
    nl.coverage_mean = 63.175;
    nl.coverage_std = 9.944;
    nl.coverage_n = 71;

    CampaignSummary gs = nl;
    gs.style = prompt::PromptStyle::GherkinStructured;
    gs.executable_pct = 97.8082191780822;
    gs.pass_rate_pct = 96.7123287671233;
    gs.coverage_mean.reset();
    gs.coverage_std.reset();
    gs.coverage_n = 0;

    auto md = render_report({nl, gs}, ReportFormat::Markdown);
    CHECK(md.find("| NL |") != std::string::npos);
    CHECK(md.find("| Gherkin |") != std::string::npos);
    CHECK(md.find("Executable (%)") != std::string::npos);
    CHECK(md.find("Pass Rate (%)") != std::string::npos);
    CHECK(md.find("Coverage (%)") != std::string::npos);
    CHECK(md.find("71.00") != std::string::npos);
    CHECK(md.find("15.00") != std::string::npos);
    CHECK(md.find("97.81") != std::string::npos);  // half-away-from-zero at 2 decimals
    CHECK(md.find("96.71") != std::string::npos);
    CHECK(md.find("63.18 ± 9.94") != std::string::npos);
    CHECK(md.find("—") != std::string::npos);

    auto csv = render_report({nl, gs}, ReportFormat::Csv);
    CHECK(csv.find("Metric,NL,Gherkin") != std::string::npos);
    CHECK(csv.find("Executable (%),71.00,97.81") != std::string::npos);
    CHECK(csv.find("Pass Rate (%),15.00,96.71") != std::string::npos);
    CHECK(csv.find("63.18 ± 9.94") != std::string::npos);
}

TEST_CASE("style diff: signed deltas and the winner flag") {
    CampaignSummary a;
    a.scenario = "hello_world";
    a.style = prompt::PromptStyle::NaturalLanguage;
    a.stage = Stage::PostRepair;
    a.executable_pct = 71.0;
    a.pass_rate_pct = 15.0;
    a.coverage_mean = 63.18;

    CampaignSummary b = a;
    b.style = prompt::PromptStyle::GherkinStructured;
    b.executable_pct = 97.8082191780822;
    b.pass_rate_pct = 96.7123287671233;
    b.coverage_mean = 51.26;

    auto diff = diff_summaries(a, b);
    CHECK(diff.executable_delta == doctest::Approx(26.8082191780822).epsilon(1e-9));
    CHECK(diff.larger_executable == 1);
    auto md = render_diff(diff, ReportFormat::Markdown);
    CHECK(md.find("+26.81") != std::string::npos);
    CHECK(md.find("Higher executable rate: Gherkin") != std::string::npos);

    // pass-rate deltas render with their sign even when negative
    CampaignSummary c = a;
    c.executable_pct = 49.43;
    c.pass_rate_pct = 9.09;
    c.coverage_mean = 50.0;
    CampaignSummary d = b;
    d.executable_pct = 94.56;
    d.pass_rate_pct = 6.81;
    d.coverage_mean = 50.0;
    auto diff2 = diff_summaries(c, d);
    CHECK(diff2.pass_rate_delta == doctest::Approx(-2.28).epsilon(1e-9));
    auto md2 = render_diff(diff2, ReportFormat::Markdown);
    CHECK(md2.find("-2.28") != std::string::npos);
    CHECK(md2.find("+45.13") != std::string::npos);

    auto csv = render_diff(diff, ReportFormat::Csv);
    CHECK(csv.find("higher_executable,Gherkin") != std::string::npos);
}

TEST_CASE("diff rejects mismatched scenario or stage") {
    CampaignSummary a;
    a.scenario = "one";
    a.stage = Stage::PostRepair;
    CampaignSummary b = a;
    b.scenario = "two";
    CHECK_THROWS_AS(diff_summaries(a, b), ScenarioMismatchError);
    CampaignSummary c = a;
    c.stage = Stage::PreRepair;
    CHECK_THROWS_AS(diff_summaries(a, c), ScenarioMismatchError);
}

TEST_CASE("style labels") {
    CHECK(style_label(prompt::PromptStyle::NaturalLanguage) == "NL");
    CHECK(style_label(prompt::PromptStyle::GherkinStructured) == "Gherkin");
}

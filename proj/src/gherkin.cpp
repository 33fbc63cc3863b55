#include "acteval/gherkin.hpp"

#include <array>
#include <unordered_set>

#include "acteval/util.hpp"

namespace acteval::gherkin {

namespace {

constexpr std::array<const char*, 5> kKeywords = {"Given", "When", "Then", "And", "But"};

int rank_of(StepKeyword k) {
    switch (k) {
        case StepKeyword::Given: return 0;
        case StepKeyword::When: return 1;
        case StepKeyword::Then: return 2;
        default: return -1;
    }
}

}  // namespace

const char* keyword_text(StepKeyword k) {
    return kKeywords[static_cast<size_t>(k)];
}

std::optional<StepKeyword> keyword_from(const std::string& word) {
    for (size_t i = 0; i < kKeywords.size(); ++i) {
        if (word == kKeywords[i]) return static_cast<StepKeyword>(i);
    }
    return std::nullopt;
}

bool is_primary_keyword(StepKeyword k) {
    return k == StepKeyword::Given || k == StepKeyword::When || k == StepKeyword::Then;
}

ParseResult parse_gherkin(const std::string& text) {
    ParseResult result;
    std::vector<ParseError>& errors = result.errors;

    const std::vector<std::string> lines = split_lines(text);
    bool any_content = false;
    for (const auto& raw : lines) {
        std::string t = trim(raw);
        if (!t.empty() && t[0] != '#') {
            any_content = true;
            break;
        }
    }
    if (!any_content) {
        errors.push_back({"EmptyInput", "input contains no Gherkin content", 0});
        return result;
    }

    Feature feature;
    bool feature_seen = false;
    std::vector<std::string> description_lines;
    std::vector<Scenario> scenarios;
    Scenario current;
    bool in_scenario = false;

    auto close_scenario = [&](int line_no) {
        if (!in_scenario) return;
        if (current.steps.empty()) {
            errors.push_back({"ScenarioWithoutSteps",
                              "scenario \"" + current.name + "\" has no steps", line_no});
        }
        scenarios.push_back(std::move(current));
        current = Scenario{};
        in_scenario = false;
    };

    for (size_t i = 0; i < lines.size(); ++i) {
        const int line_no = static_cast<int>(i) + 1;
        const std::string t = trim(lines[i]);
        if (t.empty() || t[0] == '#') continue;

        if (starts_with_word(t, "Feature")) {
            if (t.size() < 8 || t[7] != ':') {
                errors.push_back({"UnknownKeywordLine", "expected 'Feature:'", line_no});
                continue;
            }
            if (feature_seen) {
                errors.push_back({"UnknownKeywordLine", "duplicate Feature line", line_no});
                continue;
            }
            feature_seen = true;
            feature.name = trim(t.substr(8));
            continue;
        }

        if (starts_with_word(t, "Scenario")) {
            if (t.size() < 9 || t[8] != ':') {
                // Scenario Outline and friends are outside the supported subset.
                errors.push_back({"UnknownKeywordLine",
                                  "unsupported construct (expected 'Scenario:'): " + t,
                                  line_no});
                continue;
            }
            if (!feature_seen) {
                errors.push_back({"MissingFeature",
                                  "Scenario before any Feature line", line_no});
                feature_seen = true;  // keep collecting to report more issues
            }
            close_scenario(line_no);
            in_scenario = true;
            current.name = trim(t.substr(9));
            continue;
        }

        if (t[0] == '@' || starts_with_word(t, "Background") ||
            starts_with_word(t, "Examples") || starts_with_word(t, "Rule")) {
            errors.push_back({"UnknownKeywordLine", "unsupported construct: " + t, line_no});
            continue;
        }

        // Step line?
        size_t sp = t.find_first_of(" \t");
        std::string head = sp == std::string::npos ? t : t.substr(0, sp);
        if (auto kw = keyword_from(head)) {
            if (!feature_seen || !in_scenario) {
                errors.push_back({feature_seen ? "UnknownKeywordLine" : "MissingFeature",
                                  "step line outside a scenario", line_no});
                continue;
            }
            std::string step_text = sp == std::string::npos ? "" : trim(t.substr(sp));
            if (step_text.empty()) {
                errors.push_back({"UnknownKeywordLine", "step has no text", line_no});
                continue;
            }
            if (current.steps.empty() && !is_primary_keyword(*kw)) {
                errors.push_back({"LeadingAndBut",
                                  std::string(keyword_text(*kw)) +
                                      " may not open a scenario", line_no});
                continue;
            }
            current.steps.push_back({*kw, std::move(step_text), line_no});
            continue;
        }

        if (feature_seen && !in_scenario) {
            description_lines.push_back(t);  // feature description
            continue;
        }
        errors.push_back({feature_seen ? "UnknownKeywordLine" : "MissingFeature",
                          "unrecognized line: " + t, line_no});
    }
    close_scenario(static_cast<int>(lines.size()));

    if (!feature_seen) {
        errors.push_back({"MissingFeature", "no Feature line found", 0});
    }
    if (scenarios.empty() && errors.empty()) {
        errors.push_back({"ScenarioWithoutSteps", "feature has no scenarios", 0});
    }
    if (!errors.empty()) return result;

    feature.description = join(description_lines, "\n");
    feature.scenarios = std::move(scenarios);
    result.document = GherkinDocument{std::move(feature), text};
    return result;
}

std::string render_gherkin(const GherkinDocument& doc) {
    std::string out = "Feature: " + doc.feature.name + "\n";
    if (!doc.feature.description.empty()) {
        for (const auto& line : split_lines(doc.feature.description)) {
            out += "  " + line + "\n";
        }
    }
    for (const auto& scenario : doc.feature.scenarios) {
        out += "\n  Scenario: " + scenario.name + "\n";
        for (const auto& step : scenario.steps) {
            out += "    " + std::string(keyword_text(step.keyword)) + " " + step.text + "\n";
        }
    }
    return out;
}

std::vector<StepKeyword> resolved_keywords(const Scenario& scenario) {
    std::vector<StepKeyword> out;
    out.reserve(scenario.steps.size());
    StepKeyword last = StepKeyword::Given;
    for (const auto& step : scenario.steps) {
        if (is_primary_keyword(step.keyword)) last = step.keyword;
        out.push_back(last);
    }
    return out;
}

std::vector<LintFinding> validate(const GherkinDocument& doc) {
    std::vector<LintFinding> findings;

    if (doc.feature.scenarios.size() > 5) {
        findings.push_back({LintSeverity::Warning, "TOO_MANY_SCENARIOS",
                            "feature has " + std::to_string(doc.feature.scenarios.size()) +
                                " scenarios; more than 5 hurts focus",
                            0});
    }

    std::unordered_set<std::string> names;
    for (const auto& scenario : doc.feature.scenarios) {
        if (!names.insert(scenario.name).second) {
            findings.push_back({LintSeverity::Error, "DUPLICATE_SCENARIO_NAME",
                                "duplicate scenario name \"" + scenario.name + "\"", 0});
        }
        const auto resolved = resolved_keywords(scenario);
        int max_rank = -1;
        for (size_t i = 0; i < resolved.size(); ++i) {
            int r = rank_of(resolved[i]);
            if (r < max_rank) {
                findings.push_back({LintSeverity::Warning, "THEN_BEFORE_WHEN",
                                    "step order regresses in scenario \"" + scenario.name +
                                        "\"",
                                    scenario.steps[i].line});
                break;
            }
            max_rank = r;
        }
    }
    return findings;
}

bool has_error_finding(const std::vector<LintFinding>& findings) {
    for (const auto& f : findings) {
        if (f.severity == LintSeverity::Error) return true;
    }
    return false;
}

}  // namespace acteval::gherkin

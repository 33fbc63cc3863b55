#pragma once

#include <optional>
#include <string>
#include <vector>

namespace acteval::gherkin {

enum class StepKeyword { Given, When, Then, And, But };

const char* keyword_text(StepKeyword k);
std::optional<StepKeyword> keyword_from(const std::string& word);
bool is_primary_keyword(StepKeyword k);

struct Step {
    StepKeyword keyword{StepKeyword::Given};
    std::string text;  // trimmed, no newlines
    int line = 0;      // 1-based line in the source text, 0 when synthesized

    bool operator==(const Step& other) const {
        return keyword == other.keyword && text == other.text;
    }
};

struct Scenario {
    std::string name;
    std::vector<Step> steps;

    bool operator==(const Scenario& other) const {
        return name == other.name && steps == other.steps;
    }
};

struct Feature {
    std::string name;
    std::string description;  // possibly empty, newline-joined
    std::vector<Scenario> scenarios;

    bool operator==(const Feature& other) const {
        return name == other.name && description == other.description &&
               scenarios == other.scenarios;
    }
};

struct GherkinDocument {
    Feature feature;
    std::optional<std::string> source_text;  // absent when synthesized

    // Tree equality: source text and line numbers are not compared.
    bool operator==(const GherkinDocument& other) const {
        return feature == other.feature;
    }
};

struct ParseError {
    std::string code;     // EmptyInput, MissingFeature, ScenarioWithoutSteps,
                          // LeadingAndBut, UnknownKeywordLine
    std::string message;
    int line = 0;
};

struct ParseResult {
    std::optional<GherkinDocument> document;
    std::vector<ParseError> errors;

    bool ok() const { return document.has_value(); }
};

// Subset grammar: Feature, description lines, Scenario, Given/When/Then/And/But
// steps, '#' comments. Anything else is an UnknownKeywordLine.
ParseResult parse_gherkin(const std::string& text);

// Canonical rendering: 2-space indent per level, one blank line between
// scenarios, LF line endings. parse(render(d)) == d.
std::string render_gherkin(const GherkinDocument& doc);

enum class LintSeverity { Warning, Error };

struct LintFinding {
    LintSeverity severity{LintSeverity::Warning};
    std::string code;
    std::string message;
    int line = 0;
};

// Lint rules: TOO_MANY_SCENARIOS (> 5), THEN_BEFORE_WHEN (resolved keyword
// order regresses), DUPLICATE_SCENARIO_NAME (error severity).
std::vector<LintFinding> validate(const GherkinDocument& doc);

bool has_error_finding(const std::vector<LintFinding>& findings);

// And/But inherit the nearest preceding primary keyword; a leading And/But
// is rejected at parse time so the front is always primary.
std::vector<StepKeyword> resolved_keywords(const Scenario& scenario);

}  // namespace acteval::gherkin

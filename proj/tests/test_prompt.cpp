#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>

#include "acteval/errors.hpp"
#include "acteval/gherkin.hpp"
#include "acteval/prompt.hpp"
#include "doctest.h"
#include "support/helpers.hpp"

using namespace acteval;
using namespace acteval::prompt;

namespace {

ContextFile code_file(const std::string& path, const std::string& content) {
    return ContextFile{path, content, ContextKind::Code};
}

}  // namespace

TEST_CASE("style names round-trip") {
    CHECK(std::string(style_name(PromptStyle::NaturalLanguage)) == "nl");
    CHECK(std::string(style_name(PromptStyle::GherkinStructured)) == "gs");
    CHECK(style_from("nl") == PromptStyle::NaturalLanguage);
    CHECK(style_from("gs") == PromptStyle::GherkinStructured);
    CHECK(!style_from("gherkin").has_value());
}

TEST_CASE("criteria file loading") {
    testsupport::TempDir dir("prompt");
    auto good = dir.path / "c.json";
    testsupport::write_file(good, R"([{"id":"a-1","text":"does a thing"}])");
    auto criteria = load_criteria_file(good);
    REQUIRE(criteria.size() == 1);
    CHECK(criteria[0].id == "a-1");
    CHECK(criteria[0].text == "does a thing");

    auto empty_text = dir.path / "bad.json";
    testsupport::write_file(empty_text, R"([{"id":"a-1","text":"  "}])");
    CHECK_THROWS_AS(load_criteria_file(empty_text), ConfigError);

    auto not_array = dir.path / "obj.json";
    testsupport::write_file(not_array, R"({"id":"a-1"})");
    CHECK_THROWS_AS(load_criteria_file(not_array), ConfigError);

    CHECK_THROWS_AS(load_criteria_file(dir.path / "missing.json"), IoError);
}

TEST_CASE("NL prompt inlines a single criterion and bullets several") {
    std::vector<AcceptanceCriterion> one{{"c1", "should return hello world"}};
    auto bundle = build_nl_prompt(one, {code_file("main.py", "print('x')\n")});
    CHECK(bundle.instruction ==
          "Write pytest tests for the following acceptance criteria: "
          "should return hello world");
    CHECK(bundle.style == PromptStyle::NaturalLanguage);
    REQUIRE(bundle.context.size() == 1);
    CHECK(bundle.context[0].virtual_path == "main.py");

    std::vector<AcceptanceCriterion> two{{"c1", "first"}, {"c2", "second"}};
    auto multi = build_nl_prompt(two, {});
    CHECK(multi.instruction ==
          "Write pytest tests for the following acceptance criteria:\n"
          "- first\n"
          "- second");

    CHECK_THROWS_AS(build_nl_prompt({}, {}), EmptyCriteriaError);
}

TEST_CASE("context paths must stay inside the root") {
    std::vector<AcceptanceCriterion> one{{"c1", "x"}};
    CHECK_THROWS_AS(build_nl_prompt(one, {code_file("../escape.py", "")}), ConfigError);
    CHECK_THROWS_AS(build_nl_prompt(one, {code_file("/abs/path.py", "")}), ConfigError);
}

TEST_CASE("GS prompt keeps source step lines byte-for-byte") {
    auto source = testsupport::read_file(testsupport::source_dir() /
                                         "fixtures/features/digit_classifier.feature");
    auto parsed = gherkin::parse_gherkin(source);
    REQUIRE(parsed.ok());
    auto bundle = build_gs_prompt(*parsed.document, {code_file("src/a.py", "pass\n")});
    CHECK(bundle.style == PromptStyle::GherkinStructured);
    // The feature file spells two step lines with a double space after the
    // keyword; the instruction must preserve them.
    CHECK(bundle.instruction.find("And  a test set") != std::string::npos);
    CHECK(bundle.instruction.find("Then  I get an accuracy of more than 95 percent") !=
          std::string::npos);
    CHECK(bundle.instruction.find(
              "Given the files, generate me a pytest for the acceptance criteria:") == 0);
    CHECK(bundle.instruction.find("When importing files, take the project structure "
                                  "into account.") != std::string::npos);
    // Canonical rendering appended as extra context after the code files.
    REQUIRE(bundle.context.size() == 2);
    CHECK(bundle.context[1].virtual_path == "acceptance.feature");
    CHECK(bundle.context[1].kind == ContextKind::GherkinFeature);
    CHECK(bundle.context[1].content == gherkin::render_gherkin(*parsed.document));
}

TEST_CASE("GS prompt renders canonical steps without source text") {
    gherkin::GherkinDocument doc;
    doc.feature.name = "f";
    gherkin::Scenario s;
    s.name = "s";
    s.steps.push_back({gherkin::StepKeyword::Given, "a precondition", 0});
    s.steps.push_back({gherkin::StepKeyword::Then, "an outcome", 0});
    doc.feature.scenarios.push_back(s);
    auto bundle = build_gs_prompt(doc, {});
    CHECK(bundle.instruction.find("Given a precondition\nThen an outcome") !=
          std::string::npos);
}

TEST_CASE("Gherkin generation prompt shape") {
    std::vector<AcceptanceCriterion> criteria{
        {"g1", "the function should log hello world to the console."},
        {"g2", "the function should recognize more than 95 percent of digits correctly."}};
    ContextFile reference{"gherkin_reference.md", "# Gherkin\nsome rules\n",
                          ContextKind::ReferenceDoc};
    auto bundle = build_gherkin_gen_prompt(criteria, reference);
    CHECK(!bundle.style.has_value());
    CHECK(bundle.instruction ==
          "Given the Gherkin reference, generate me Gherkin syntax-compliant "
          "instructions for the following acceptance criteria:\n"
          "- the function should log hello world to the console.\n"
          "- the function should recognize more than 95 percent of digits correctly.\n"
          "Write them in an explicit way to be easily testable");
    REQUIRE(bundle.context.size() == 1);
    CHECK(bundle.context[0].kind == ContextKind::ReferenceDoc);

    CHECK_THROWS_AS(build_gherkin_gen_prompt({}, reference), EmptyCriteriaError);
    ContextFile wrong_kind{"r.md", "content", ContextKind::Code};
    CHECK_THROWS_AS(build_gherkin_gen_prompt(criteria, wrong_kind), MissingReferenceError);
    ContextFile empty_ref{"r.md", "", ContextKind::ReferenceDoc};
    CHECK_THROWS_AS(build_gherkin_gen_prompt(criteria, empty_ref), MissingReferenceError);
}

TEST_CASE("serialization and the size probe") {
    ContextFile f = code_file("pkg/mod.py", "x = 1\n");
    CHECK(serialize_context_file(f) == "// file: pkg/mod.py\nx = 1\n");
    auto probe = serialized_size_probe("INSTR", {f, code_file("b.py", "y")});
    CHECK(probe == "INSTR\n\n// file: pkg/mod.py\nx = 1\n\n\n// file: b.py\ny");
}

TEST_CASE("budget drops whole files from the end and records a notice") {
    PromptTemplates tight;
    tight.budget_chars = 120;
    std::vector<AcceptanceCriterion> one{{"c1", "x"}};
    std::vector<ContextFile> ctx{
        code_file("keep.py", std::string(20, 'a')),
        code_file("drop.py", std::string(500, 'b')),
    };
    auto bundle = build_nl_prompt(one, ctx, tight);
    REQUIRE(bundle.context.size() == 1);
    CHECK(bundle.context[0].virtual_path == "keep.py");
    REQUIRE(bundle.notices.size() == 1);
    CHECK(bundle.notices[0].find("DroppedFiles: 1") == 0);
    CHECK(serialized_size_probe(bundle.instruction, bundle.context).size() <=
          tight.budget_chars);

    PromptTemplates impossible;
    impossible.budget_chars = 5;
    CHECK_THROWS_AS(build_nl_prompt(one, {}, impossible), BudgetExceededError);
}

TEST_CASE("pack_context collects by glob in depth-then-lexicographic order") {
    testsupport::TempDir dir("prompt");
    testsupport::write_file(dir.path / "b.py", "bee\n");
    testsupport::write_file(dir.path / "a.py", "ay\n");
    testsupport::write_file(dir.path / "readme.txt", "nope\n");
    testsupport::write_file(dir.path / "pkg" / "deep.py", "deep\n");
    testsupport::write_file(dir.path / "pkg" / "sub" / "deeper.py", "deeper\n");

    auto result = pack_context(dir.path, {"**/*.py"}, 24000);
    REQUIRE(result.files.size() == 4);
    CHECK(result.files[0].virtual_path == "a.py");
    CHECK(result.files[1].virtual_path == "b.py");
    CHECK(result.files[2].virtual_path == "pkg/deep.py");
    CHECK(result.files[3].virtual_path == "pkg/sub/deeper.py");
    CHECK(result.files[0].content == "ay\n");
    CHECK(result.notices.empty());
}

TEST_CASE("pack_context honours its budget with a DroppedFiles notice") {
    testsupport::TempDir dir("prompt");
    testsupport::write_file(dir.path / "a.py", std::string(30, 'a'));
    testsupport::write_file(dir.path / "z.py", std::string(400, 'z'));
    auto result = pack_context(dir.path, {"*.py"}, 100);
    REQUIRE(result.files.size() == 1);
    CHECK(result.files[0].virtual_path == "a.py");
    REQUIRE(result.notices.size() == 1);
    CHECK(result.notices[0].find("DroppedFiles") != std::string::npos);
}

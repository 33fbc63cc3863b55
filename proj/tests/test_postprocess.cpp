#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>
#include <string>
#include <vector>

#include "acteval/errors.hpp"
#include "acteval/postprocess.hpp"
#include "acteval/util.hpp"
#include "doctest.h"
#include "support/helpers.hpp"

using namespace acteval;
using namespace acteval::postprocess;

namespace {

std::string reassemble(const GeneratedArtifact& a) {
    std::string out = a.prose.at(0);
    for (size_t i = 0; i < a.blocks.size(); ++i) {
        out += a.blocks[i];
        out += a.prose.at(i + 1);
    }
    return out;
}

ProjectManifest toy_manifest() {
    ProjectManifest m;
    m.module_names = {"pkg", "pkg.alpha", "beta"};
    m.known_external = {{"np", "import numpy as np"}, {"pytest", "import pytest"}};
    m.source_root = "../project";
    m.package_dirs = {"pkg"};
    return m;
}

ProjectManifest hello_manifest() {
    return build_manifest(testsupport::source_dir() / "fixtures/hello_world",
                          load_known_external(testsupport::source_dir() /
                                              "fixtures/known_external.json"),
                          "../project");
}

std::vector<RepairAction> mutating(const std::vector<RepairAction>& actions) {
    std::vector<RepairAction> out;
    for (const auto& a : actions) {
        if (is_mutating(a)) out.push_back(a);
    }
    return out;
}

}  // namespace

TEST_CASE("extraction: fenced block with surrounding prose") {
    std::string raw =
        "Sure, here you go:\n"
        "```python\n"
        "def test_a():\n"
        "    assert True\n"
        "```\n"
        "Hope that helps.\n";
    auto a = extract_code(raw);
    REQUIRE(a.blocks.size() == 1);
    CHECK(a.blocks[0] == "def test_a():\n    assert True\n");
    CHECK(a.languages[0] == "python");
    REQUIRE(a.prose.size() == 2);
    CHECK(reassemble(a) == raw);
    CHECK(a.chosen == 0);
}

TEST_CASE("extraction: fence-free response is one block") {
    std::string raw = "def test_b():\n    assert 1 == 1\n";
    auto a = extract_code(raw);
    REQUIRE(a.blocks.size() == 1);
    CHECK(a.blocks[0] == raw);
    CHECK(a.languages[0].empty());
    CHECK(a.prose == std::vector<std::string>{"", ""});
    CHECK(reassemble(a) == raw);
}

TEST_CASE("extraction: unclosed fence runs to end of text") {
    std::string raw = "intro\n```python\ndef test_c():\n    pass";
    auto a = extract_code(raw);
    REQUIRE(a.blocks.size() == 1);
    CHECK(a.blocks[0] == "def test_c():\n    pass");
    CHECK(reassemble(a) == raw);
}

TEST_CASE("extraction: chosen block prefers test definitions over length") {
    std::string raw =
        "```python\n" + std::string(200, '#') + "\n```\n"
        "```python\ndef test_real():\n    assert True\n```\n";
    auto a = extract_code(raw);
    REQUIRE(a.blocks.size() == 2);
    CHECK(a.chosen == 1);
    CHECK(a.chosen_block().find("def test_real") != std::string::npos);

    std::string no_tests = "```\nshort\n```\nmid\n```\nmuch longer content here\n```\n";
    auto b = extract_code(no_tests);
    CHECK(b.chosen == 1);
}

TEST_CASE("extraction: blank input is an error") {
    CHECK_THROWS_AS(extract_code(""), Error);
    CHECK_THROWS_AS(extract_code("   \n\t\n"), Error);
    try {
        extract_code("");
    } catch (const Error& e) {
        CHECK(std::string(e.code()) == "empty_response");
    }
}

TEST_CASE("extraction totality holds over randomized fence layouts") {
    std::mt19937 rng(7);
    const std::vector<std::string> pieces = {
        "``` ",       "```",     "```python", "def test_x():", "    assert True",
        "plain text", "",        "  ```",     "tick ``` mid",  "````",
        "final line",
    };
    for (int round = 0; round < 500; ++round) {
        std::string raw;
        int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) {
            raw += pieces[rng() % pieces.size()];
            if (rng() % 8 != 0) raw += "\n";
        }
        if (trim(raw).empty()) continue;
        auto a = extract_code(raw);
        REQUIRE(a.prose.size() == a.blocks.size() + 1);
        REQUIRE(a.languages.size() == a.blocks.size());
        REQUIRE(reassemble(a) == raw);
        REQUIRE(a.chosen >= 0);
        REQUIRE(a.chosen < static_cast<int>(a.blocks.size()));
    }
}

TEST_CASE("manifest: hello_world fixture modules and package dirs") {
    auto m = hello_manifest();
    CHECK(m.module_names.count("hello_world"));
    CHECK(m.module_names.count("hello_world.main"));
    CHECK(m.module_names.count("main"));
    CHECK(m.package_dirs == std::vector<std::string>{"hello_world"});
    CHECK(m.known_external.at("np") == "import numpy as np");
    CHECK(m.known_external.at("StringIO") == "from io import StringIO");
}

TEST_CASE("manifest: digit fixture nests under a src package") {
    auto m = build_manifest(testsupport::source_dir() / "fixtures/digit_classifier", {},
                            "../project");
    CHECK(m.module_names.count("src"));
    CHECK(m.module_names.count("src.classify_digits"));
    CHECK(m.module_names.count("classify_digits"));
    CHECK(m.module_names.count("src.dataset"));
    CHECK(m.package_dirs == std::vector<std::string>{"src"});
}

TEST_CASE("repair: unique suffix rewrite of a from-import") {
    TestFile f{"t.py", "from wrong.alpha import thing\n\ndef test_a():\n    thing()\n",
               TestStage::Raw};
    auto [repaired, actions] = repair(f, toy_manifest());
    CHECK(repaired.source.find("from pkg.alpha import thing") != std::string::npos);
    CHECK(repaired.source.find("wrong.alpha") == std::string::npos);
    bool saw_rewrite = false;
    for (const auto& a : actions) {
        if (a.kind == RepairKind::RewriteModulePath) {
            saw_rewrite = true;
            CHECK(a.detail == "wrong.alpha -> pkg.alpha");
        }
    }
    CHECK(saw_rewrite);
    CHECK(repaired.source.find("# --- path bootstrap ---") != std::string::npos);
    CHECK(repaired.stage == TestStage::Repaired);
}

TEST_CASE("repair: aliased dotted import is rewritten in place") {
    TestFile f{"t.py", "import wrong.alpha as al\n\ndef test_a():\n    al.go()\n",
               TestStage::Raw};
    auto [repaired, actions] = repair(f, toy_manifest());
    CHECK(repaired.source.find("import pkg.alpha as al") != std::string::npos);
}

TEST_CASE("repair: bare single-segment import gains a binding alias") {
    TestFile f{"t.py", "import alpha\n\ndef test_a():\n    alpha.go()\n", TestStage::Raw};
    auto [repaired, actions] = repair(f, toy_manifest());
    CHECK(repaired.source.find("import pkg.alpha as alpha") != std::string::npos);
}

TEST_CASE("repair: bare dotted import cannot be rewritten safely") {
    TestFile f{"t.py", "import wrong.alpha\n\ndef test_a():\n    wrong.alpha.go()\n",
               TestStage::Raw};
    auto [repaired, actions] = repair(f, toy_manifest());
    CHECK(repaired.source.find("import wrong.alpha\n") != std::string::npos);
    bool noted = false;
    for (const auto& a : actions) {
        if (a.kind == RepairKind::SkippedNote &&
            a.detail.find("cannot be rewritten safely") != std::string::npos) {
            noted = true;
        }
    }
    CHECK(noted);
}

TEST_CASE("repair: ambiguous suffix match is only noted") {
    ProjectManifest m;
    m.module_names = {"a.mod", "b.mod"};
    m.source_root = "../project";
    TestFile f{"t.py", "from x.mod import f\n\ndef test_a():\n    f()\n", TestStage::Raw};
    auto [repaired, actions] = repair(f, m);
    CHECK(repaired.source.find("from x.mod import f") != std::string::npos);
    bool noted = false;
    for (const auto& a : actions) {
        if (a.kind == RepairKind::SkippedNote &&
            a.detail.find("matches several project modules") != std::string::npos) {
            noted = true;
        }
    }
    CHECK(noted);
    CHECK(mutating(actions).empty());
}

TEST_CASE("repair: unknown external imports are left untouched") {
    TestFile f{"t.py", "import requests\n\ndef test_a():\n    requests.get('x')\n",
               TestStage::Raw};
    auto [repaired, actions] = repair(f, toy_manifest());
    CHECK(repaired.source.find("import requests\n") != std::string::npos);
    CHECK(repaired.source.find("# --- path bootstrap ---") == std::string::npos);
}

TEST_CASE("repair: known-external references gain their import") {
    TestFile f{"t.py", "def test_a():\n    assert np.mean([1.0]) == 1.0\n", TestStage::Raw};
    auto [repaired, actions] = repair(f, toy_manifest());
    CHECK(repaired.source.find("import numpy as np\n") == 0);
    auto muts = mutating(actions);
    REQUIRE(muts.size() == 1);
    CHECK(muts[0].kind == RepairKind::AddImport);
    CHECK(muts[0].inserted_text == "import numpy as np");
}

TEST_CASE("repair: existing import suppresses a duplicate") {
    TestFile f{"t.py", "import numpy as np\n\ndef test_a():\n    assert np.pi > 3\n",
               TestStage::Raw};
    auto [repaired, actions] = repair(f, toy_manifest());
    CHECK(mutating(actions).empty());
    CHECK(repaired.source == f.source);
}

TEST_CASE("repair: project-module reference pulls import plus bootstrap") {
    TestFile f{"t.py", "def test_a():\n    beta.run()\n", TestStage::Raw};
    auto [repaired, actions] = repair(f, toy_manifest());
    CHECK(repaired.source.find("import beta\n") != std::string::npos);
    CHECK(repaired.source.find("# --- path bootstrap ---") != std::string::npos);
    CHECK(repaired.source.find("\"../project\", \"../project/pkg\"") != std::string::npos);
}

TEST_CASE("repair: corpus response needing only the path bootstrap") {
    auto raw = testsupport::read_file(testsupport::source_dir() /
                                      "fixtures/corpora/responses/hw_nl_capfd.txt");
    auto artifact = extract_code(raw);
    TestFile f{"test_main.py", artifact.chosen_block(), TestStage::Raw};
    auto [repaired, actions] = repair(f, hello_manifest());
    CHECK(repaired.source.find("# --- path bootstrap ---") == 0);
    CHECK(repaired.source.find("from main import main") != std::string::npos);
    auto muts = mutating(actions);
    REQUIRE(muts.size() == 1);
    CHECK(muts[0].kind == RepairKind::AddPathBootstrap);
    // capfd is not a resolvable name; it must be noted, never invented
    bool capfd_note = false;
    for (const auto& a : actions) {
        if (a.kind == RepairKind::SkippedNote &&
            a.detail.find("'capfd'") != std::string::npos) {
            capfd_note = true;
        }
    }
    CHECK(capfd_note);
}

TEST_CASE("repair: import with no suffix match anywhere stays as-is") {
    auto raw = testsupport::read_file(testsupport::source_dir() /
                                      "fixtures/corpora/responses/hw_nl_unknown_import.txt");
    auto artifact = extract_code(raw);
    TestFile f{"test_main.py", artifact.chosen_block(), TestStage::Raw};
    auto [repaired, actions] = repair(f, hello_manifest());
    CHECK(repaired.source.find("from app.main_program import run_main") != std::string::npos);
    for (const auto& a : actions) {
        CHECK(a.kind != RepairKind::RewriteModulePath);
    }
}

TEST_CASE("repair is idempotent") {
    auto manifest = hello_manifest();
    std::vector<std::string> sources = {
        testsupport::read_file(testsupport::source_dir() /
                               "fixtures/defective/test_missing_bootstrap.py"),
        "def test_a():\n    assert np.mean([1.0]) == 1.0\n",
        "from wrong.alpha import thing\n\ndef test_a():\n    thing()\n",
    };
    std::vector<ProjectManifest> manifests = {manifest, toy_manifest(), toy_manifest()};
    for (size_t i = 0; i < sources.size(); ++i) {
        TestFile f{"t.py", sources[i], TestStage::Raw};
        auto [first, first_actions] = repair(f, manifests[i]);
        CHECK(!mutating(first_actions).empty());
        auto [second, second_actions] = repair(first, manifests[i]);
        CHECK(mutating(second_actions).empty());
        CHECK(second.source == first.source);
    }
}

TEST_CASE("failure classification table") {
    testrun::RunResult r;

    r.harness_error = "timeout";
    CHECK(classify_failure(r) == FailureClass::Harness);
    r.harness_error.reset();
    r.timed_out = true;
    CHECK(classify_failure(r) == FailureClass::Harness);
    r.timed_out = false;

    r.collection_error = "ModuleNotFoundError";
    CHECK(classify_failure(r) == FailureClass::Dependency);
    r.collection_error = "ImportError";
    CHECK(classify_failure(r) == FailureClass::Dependency);
    r.collection_error = "SyntaxError";
    CHECK(classify_failure(r) == FailureClass::Semantic);
    r.collection_error = "IndentationError";
    CHECK(classify_failure(r) == FailureClass::Semantic);
    r.collection_error.reset();

    r.collected = 1;
    r.executed = 1;
    r.failed = 1;
    for (const std::string sig :
         {"NameError", "AttributeError", "TypeError", "UnboundLocalError"}) {
        r.runtime_errors = {sig};
        CHECK(classify_failure(r) == FailureClass::Semantic);
    }
    r.runtime_errors = {"AssertionError"};
    CHECK(classify_failure(r) == FailureClass::None);
    r.runtime_errors.clear();
    r.failed = 0;
    r.passed = 1;
    CHECK(classify_failure(r) == FailureClass::None);

    r.executed = 0;
    r.passed = 0;
    CHECK(classify_failure(r) == FailureClass::Semantic);
}

TEST_CASE("failure class names round-trip") {
    for (auto c : {FailureClass::None, FailureClass::Dependency, FailureClass::Semantic,
                   FailureClass::Harness}) {
        CHECK(failure_class_from(failure_class_name(c)) == c);
    }
    CHECK(!failure_class_from("flaky").has_value());
}

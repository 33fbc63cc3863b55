#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "acteval/testrun.hpp"

namespace acteval::postprocess {

struct GeneratedArtifact {
    std::string raw;
    std::vector<std::string> blocks;       // fenced regions, in order
    std::vector<std::string> languages;    // fence language tags, "" when absent
    std::vector<std::string> prose;        // text around/between fences, blocks.size()+1 entries
    int chosen = 0;

    const std::string& chosen_block() const { return blocks.at(chosen); }
};

// Splits triple-backtick fenced blocks out of a raw model response. A
// fence-free response is one block equal to the whole text. Concatenating
// prose[0], blocks[0], prose[1], ... reconstructs the raw text exactly; the
// fence marker lines stay inside the neighbouring prose segments. Throws
// Error("empty_response") on blank
// input. The chosen block is the longest one containing a line starting with
// "def test_", else the longest block.
GeneratedArtifact extract_code(const std::string& raw);

enum class TestStage { Raw, Repaired };

struct TestFile {
    std::string virtual_path;
    std::string source;
    TestStage stage{TestStage::Raw};
};

enum class RepairKind { AddImport, AddPathBootstrap, RewriteModulePath, SkippedNote };

struct RepairAction {
    RepairKind kind{RepairKind::SkippedNote};
    std::string detail;
    std::string inserted_text;  // complete line or line group; empty for notes
};

bool is_mutating(const RepairAction& action);

// What the fixture project makes importable, plus the extensible table of
// well-known external symbols.
struct ProjectManifest {
    std::set<std::string> module_names;
    std::map<std::string, std::string> known_external;  // symbol -> import line
    std::string source_root;                 // relative to the test file's directory
    std::vector<std::string> package_dirs;   // relative to source_root
};

// Scans fixture_root for .py files and packages. source_root_rel is the path
// from the future test file's directory to the project copy.
ProjectManifest build_manifest(const std::filesystem::path& fixture_root,
                               std::map<std::string, std::string> known_external,
                               const std::string& source_root_rel);

std::map<std::string, std::string> load_known_external(const std::filesystem::path& path);

// Dependency repair: missing known imports are prepended, a path bootstrap is
// inserted when the file imports project modules, and reference-safe import
// paths are rewritten onto a unique suffix match. Unresolvable names become
// skipped notes. Idempotent: a repaired file yields no further mutations.
std::pair<TestFile, std::vector<RepairAction>> repair(const TestFile& file,
                                                      const ProjectManifest& manifest);

enum class FailureClass { None, Dependency, Semantic, Harness };

const char* failure_class_name(FailureClass c);
std::optional<FailureClass> failure_class_from(const std::string& name);

// Two-class taxonomy over normalized signatures, plus Harness for
// infrastructure faults and None for files where tests ran without semantic
// error signatures.
FailureClass classify_failure(const testrun::RunResult& run);

}  // namespace acteval::postprocess

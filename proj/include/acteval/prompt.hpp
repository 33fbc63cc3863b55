#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "acteval/gherkin.hpp"

namespace acteval::prompt {

struct AcceptanceCriterion {
    std::string id;
    std::string text;  // nonempty after trimming
};

// Loads a criteria file: JSON array of {"id": ..., "text": ...}.
std::vector<AcceptanceCriterion> load_criteria_file(const std::filesystem::path& path);

enum class PromptStyle { NaturalLanguage, GherkinStructured };

const char* style_name(PromptStyle s);
std::optional<PromptStyle> style_from(const std::string& name);

enum class ContextKind { Code, GherkinFeature, ReferenceDoc };

struct ContextFile {
    std::string virtual_path;  // relative, no '..' segments
    std::string content;
    ContextKind kind{ContextKind::Code};
};

// Instruction + ordered context, either one of the two campaign styles or the
// Gherkin-generation marker.
struct PromptBundle {
    std::string instruction;
    std::vector<ContextFile> context;
    std::optional<PromptStyle> style;  // nullopt = Gherkin generation
    std::size_t budget_chars = 24000;
    std::vector<std::string> notices;  // e.g. DroppedFiles records
};

// Overridable template text; defaults carry the stock wording the tool ships
// with.
struct PromptTemplates {
    std::string nl_header = "Write pytest tests for the following acceptance criteria:";
    std::string gs_header = "Given the files, generate me a pytest for the acceptance criteria:";
    std::string gs_footer =
        "Use good coding python conventions, and make sure to import any packages / "
        "fixture that you use. Do not refer to any non-existent resources. When importing "
        "files, take the project structure into account.";
    std::string gen_header =
        "Given the Gherkin reference, generate me Gherkin syntax-compliant instructions "
        "for the following acceptance criteria:";
    std::string gen_footer = "Write them in an explicit way to be easily testable";
    std::string system_preamble =
        "You are a software test engineer. Generate test code exactly as asked.";
    std::size_t budget_chars = 24000;
};

// Serialized form of one context file inside the user message:
// a "// file: <virtual_path>" banner, then the content.
std::string serialize_context_file(const ContextFile& file);

// instruction + all context files, the exact payload measured against
// budget_chars.
std::string serialized_size_probe(const std::string& instruction,
                                  const std::vector<ContextFile>& context);

// NL style. Single criterion is inlined after the header; several become a
// "- " bullet list. Throws EmptyCriteriaError, BudgetExceededError.
PromptBundle build_nl_prompt(const std::vector<AcceptanceCriterion>& criteria,
                             std::vector<ContextFile> context,
                             const PromptTemplates& templates = {});

// Gherkin-structured style. The instruction embeds the document's step lines
// between header and footer; when the document carries source text the
// original step lines are kept byte-for-byte, otherwise steps render
// canonically. The canonical .feature rendering is also appended to the
// context. Throws BudgetExceededError.
PromptBundle build_gs_prompt(const gherkin::GherkinDocument& doc,
                             std::vector<ContextFile> context,
                             const PromptTemplates& templates = {});

// Gherkin-generation prompt: header, criteria bullets, footer; the reference
// document is the sole required context entry. Throws EmptyCriteriaError,
// MissingReferenceError.
PromptBundle build_gherkin_gen_prompt(const std::vector<AcceptanceCriterion>& criteria,
                                      const ContextFile& reference,
                                      const PromptTemplates& templates = {});

struct PackResult {
    std::vector<ContextFile> files;
    std::vector<std::string> notices;  // DroppedFiles / IoError notes
};

// Collects files under root matching any include glob, ordered by
// (depth ascending, path lexicographic). Whole files are dropped from the end
// when the serialized total exceeds budget_chars.
PackResult pack_context(const std::filesystem::path& root,
                        const std::vector<std::string>& include_globs,
                        std::size_t budget_chars);

}  // namespace acteval::prompt

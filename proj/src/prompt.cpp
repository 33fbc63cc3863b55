#include "acteval/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "acteval/errors.hpp"
#include "acteval/util.hpp"
#include "json.hpp"

namespace acteval::prompt {

namespace fs = std::filesystem;

std::vector<AcceptanceCriterion> load_criteria_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read criteria file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("criteria file " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw ConfigError("criteria file must be a JSON array");
    std::vector<AcceptanceCriterion> out;
    for (const auto& item : j) {
        AcceptanceCriterion c;
        c.id = item.at("id").get<std::string>();
        c.text = item.at("text").get<std::string>();
        if (trim(c.text).empty()) {
            throw ConfigError("criterion " + c.id + " has empty text");
        }
        out.push_back(std::move(c));
    }
    return out;
}

const char* style_name(PromptStyle s) {
    return s == PromptStyle::NaturalLanguage ? "nl" : "gs";
}

std::optional<PromptStyle> style_from(const std::string& name) {
    if (name == "nl") return PromptStyle::NaturalLanguage;
    if (name == "gs") return PromptStyle::GherkinStructured;
    return std::nullopt;
}

std::string serialize_context_file(const ContextFile& file) {
    return "// file: " + file.virtual_path + "\n" + file.content;
}

std::string serialized_size_probe(const std::string& instruction,
                                  const std::vector<ContextFile>& context) {
    std::string out = instruction;
    for (const auto& f : context) {
        out += "\n\n";
        out += serialize_context_file(f);
    }
    return out;
}

namespace {

std::string bullets(const std::vector<AcceptanceCriterion>& criteria) {
    std::string out;
    for (const auto& c : criteria) {
        out += "- " + c.text + "\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

// Drops whole files from the back until the bundle fits. Instruction alone
// over budget is unrecoverable.
void fit_budget(PromptBundle& bundle) {
    if (bundle.instruction.size() > bundle.budget_chars) {
        throw BudgetExceededError("instruction alone exceeds budget of " +
                                  std::to_string(bundle.budget_chars) + " chars");
    }
    std::size_t dropped = 0;
    while (!bundle.context.empty() &&
           serialized_size_probe(bundle.instruction, bundle.context).size() >
               bundle.budget_chars) {
        bundle.context.pop_back();
        ++dropped;
    }
    if (dropped > 0) {
        bundle.notices.push_back("DroppedFiles: " + std::to_string(dropped) +
                                 " context file(s) dropped to fit budget");
    }
}

void check_paths(const std::vector<ContextFile>& context) {
    for (const auto& f : context) {
        fs::path p(f.virtual_path);
        if (p.is_absolute()) {
            throw ConfigError("context path must be relative: " + f.virtual_path);
        }
        for (const auto& part : p) {
            if (part == "..") {
                throw ConfigError("context path escapes root: " + f.virtual_path);
            }
        }
    }
}

// Step lines exactly as they appeared in the source, found via the recorded
// line numbers; canonical "Keyword text" otherwise.
std::vector<std::string> step_lines(const gherkin::GherkinDocument& doc) {
    std::vector<std::string> source_lines;
    if (doc.source_text) source_lines = split_lines(*doc.source_text);
    std::vector<std::string> out;
    for (const auto& scenario : doc.feature.scenarios) {
        for (const auto& step : scenario.steps) {
            if (doc.source_text && step.line >= 1 &&
                step.line <= static_cast<int>(source_lines.size())) {
                out.push_back(trim(source_lines[step.line - 1]));
            } else {
                out.push_back(std::string(gherkin::keyword_text(step.keyword)) + " " +
                              step.text);
            }
        }
    }
    return out;
}

}  // namespace

PromptBundle build_nl_prompt(const std::vector<AcceptanceCriterion>& criteria,
                             std::vector<ContextFile> context,
                             const PromptTemplates& templates) {
    if (criteria.empty()) throw EmptyCriteriaError();
    check_paths(context);
    PromptBundle bundle;
    bundle.style = PromptStyle::NaturalLanguage;
    bundle.budget_chars = templates.budget_chars;
    if (criteria.size() == 1) {
        bundle.instruction = templates.nl_header + " " + criteria[0].text;
    } else {
        bundle.instruction = templates.nl_header + "\n" + bullets(criteria);
    }
    bundle.context = std::move(context);
    fit_budget(bundle);
    return bundle;
}

PromptBundle build_gs_prompt(const gherkin::GherkinDocument& doc,
                             std::vector<ContextFile> context,
                             const PromptTemplates& templates) {
    check_paths(context);
    PromptBundle bundle;
    bundle.style = PromptStyle::GherkinStructured;
    bundle.budget_chars = templates.budget_chars;
    bundle.instruction = templates.gs_header + "\n\n" + join(step_lines(doc), "\n") +
                         "\n\n" + templates.gs_footer;
    bundle.context = std::move(context);
    bundle.context.push_back(
        ContextFile{"acceptance.feature", render_gherkin(doc), ContextKind::GherkinFeature});
    fit_budget(bundle);
    return bundle;
}

PromptBundle build_gherkin_gen_prompt(const std::vector<AcceptanceCriterion>& criteria,
                                      const ContextFile& reference,
                                      const PromptTemplates& templates) {
    if (criteria.empty()) throw EmptyCriteriaError();
    if (reference.kind != ContextKind::ReferenceDoc || reference.content.empty()) {
        throw MissingReferenceError();
    }
    PromptBundle bundle;
    bundle.style = std::nullopt;
    bundle.budget_chars = templates.budget_chars;
    bundle.instruction =
        templates.gen_header + "\n" + bullets(criteria) + "\n" + templates.gen_footer;
    bundle.context.push_back(reference);
    fit_budget(bundle);
    return bundle;
}

namespace {

// Glob with '*' (within a segment), '**' (across segments) and '?'.
bool glob_match(std::string_view pattern, std::string_view path) {
    if (pattern.empty()) return path.empty();
    if (pattern.substr(0, 3) == "**/") {
        // '**/' may consume zero or more leading segments.
        if (glob_match(pattern.substr(3), path)) return true;
        size_t slash = path.find('/');
        if (slash == std::string_view::npos) return false;
        return glob_match(pattern, path.substr(slash + 1));
    }
    if (pattern[0] == '*') {
        if (pattern.size() >= 2 && pattern[1] == '*') {
            // bare '**' matches anything
            for (size_t i = 0; i <= path.size(); ++i) {
                if (glob_match(pattern.substr(2), path.substr(i))) return true;
            }
            return false;
        }
        for (size_t i = 0; i <= path.size(); ++i) {
            if (i < path.size() && path[i] == '/') break;
            if (glob_match(pattern.substr(1), path.substr(i))) return true;
            if (i == path.size()) break;
        }
        return false;
    }
    if (path.empty()) return false;
    if (pattern[0] == '?' && path[0] != '/') {
        return glob_match(pattern.substr(1), path.substr(1));
    }
    if (pattern[0] != path[0]) return false;
    return glob_match(pattern.substr(1), path.substr(1));
}

int path_depth(const std::string& rel) {
    return static_cast<int>(std::count(rel.begin(), rel.end(), '/'));
}

}  // namespace

PackResult pack_context(const fs::path& root, const std::vector<std::string>& include_globs,
                        std::size_t budget_chars) {
    if (!fs::is_directory(root)) {
        throw IoError("context root is not a directory: " + root.string());
    }
    PackResult result;
    std::vector<std::string> rel_paths;
    for (auto it = fs::recursive_directory_iterator(root); it != fs::recursive_directory_iterator();
         ++it) {
        if (!it->is_regular_file()) continue;
        std::string rel = fs::relative(it->path(), root).generic_string();
        for (const auto& g : include_globs) {
            if (glob_match(g, rel)) {
                rel_paths.push_back(rel);
                break;
            }
        }
    }
    std::sort(rel_paths.begin(), rel_paths.end(), [](const std::string& a, const std::string& b) {
        int da = path_depth(a), db = path_depth(b);
        if (da != db) return da < db;
        return a < b;
    });

    std::vector<ContextFile> files;
    size_t failures = 0;
    for (const auto& rel : rel_paths) {
        std::ifstream in(root / rel, std::ios::binary);
        if (!in) {
            result.notices.push_back("IoError: unreadable file " + rel);
            ++failures;
            continue;
        }
        std::ostringstream content;
        content << in.rdbuf();
        files.push_back(ContextFile{rel, content.str(), ContextKind::Code});
    }
    if (!rel_paths.empty() && failures == rel_paths.size()) {
        throw IoError("all matched context files were unreadable under " + root.string());
    }

    // Budget: drop whole files from the end of the order.
    auto total = [&files]() {
        std::size_t n = 0;
        for (const auto& f : files) n += serialize_context_file(f).size() + 2;
        return n;
    };
    std::size_t dropped = 0;
    while (!files.empty() && total() > budget_chars) {
        files.pop_back();
        ++dropped;
    }
    if (dropped > 0) {
        result.notices.push_back("DroppedFiles: " + std::to_string(dropped) +
                                 " file(s) over budget " + std::to_string(budget_chars));
    }
    result.files = std::move(files);
    return result;
}

}  // namespace acteval::prompt

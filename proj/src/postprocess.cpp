#include "acteval/postprocess.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "acteval/errors.hpp"
#include "acteval/util.hpp"
#include "json.hpp"

namespace acteval::postprocess {

namespace fs = std::filesystem;

// ---------------- extraction ----------------

GeneratedArtifact extract_code(const std::string& raw) {
    if (trim(raw).empty()) throw Error("empty_response", "model response is blank");

    GeneratedArtifact artifact;
    artifact.raw = raw;

    struct LineSpan {
        size_t begin;
        size_t end;  // one past newline
    };
    std::vector<LineSpan> spans;
    size_t pos = 0;
    while (pos <= raw.size()) {
        size_t nl = raw.find('\n', pos);
        if (nl == std::string::npos) {
            spans.push_back({pos, raw.size()});
            break;
        }
        spans.push_back({pos, nl + 1});
        pos = nl + 1;
        if (pos == raw.size()) break;
    }

    bool in_block = false;
    size_t segment_start = 0;
    size_t block_start = 0;
    for (const auto& span : spans) {
        std::string line = trim(raw.substr(span.begin, span.end - span.begin));
        if (line.substr(0, 3) != "```") continue;
        if (!in_block) {
            artifact.prose.push_back(raw.substr(segment_start, span.end - segment_start));
            artifact.languages.push_back(trim(line.substr(3)));
            block_start = span.end;
            in_block = true;
        } else {
            artifact.blocks.push_back(raw.substr(block_start, span.begin - block_start));
            segment_start = span.begin;
            in_block = false;
        }
    }
    if (in_block) {
        artifact.blocks.push_back(raw.substr(block_start));
        artifact.prose.push_back("");
    } else if (!artifact.blocks.empty()) {
        artifact.prose.push_back(raw.substr(segment_start));
    }

    if (artifact.blocks.empty()) {
        artifact.blocks.push_back(raw);
        artifact.languages.push_back("");
        artifact.prose = {"", ""};
    }

    auto has_test_def = [](const std::string& block) {
        for (const auto& line : split_lines(block)) {
            std::string t = trim(line);
            if (t.rfind("def test_", 0) == 0) return true;
        }
        return false;
    };

    int best = -1;
    size_t best_len = 0;
    for (size_t i = 0; i < artifact.blocks.size(); ++i) {
        if (has_test_def(artifact.blocks[i]) && artifact.blocks[i].size() > best_len) {
            best = static_cast<int>(i);
            best_len = artifact.blocks[i].size();
        }
    }
    if (best < 0) {
        for (size_t i = 0; i < artifact.blocks.size(); ++i) {
            if (artifact.blocks[i].size() > best_len) {
                best = static_cast<int>(i);
                best_len = artifact.blocks[i].size();
            }
        }
    }
    artifact.chosen = best < 0 ? 0 : best;
    return artifact;
}

// ---------------- python lexical scan ----------------

namespace {

const std::unordered_set<std::string>& python_noise() {
    static const std::unordered_set<std::string> names = {
        // keywords
        "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
        "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
        "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise",
        "return", "try", "while", "with", "yield", "match", "case",
        // builtins and dunder context
        "print", "len", "range", "sum", "min", "max", "abs", "int", "float", "str", "bool",
        "list", "dict", "set", "tuple", "frozenset", "bytes", "bytearray", "object", "type",
        "isinstance", "issubclass", "enumerate", "zip", "map", "filter", "sorted", "reversed",
        "open", "input", "repr", "hash", "id", "iter", "next", "getattr", "setattr", "hasattr",
        "delattr", "callable", "super", "property", "staticmethod", "classmethod", "vars",
        "dir", "globals", "locals", "exec", "eval", "compile", "round", "divmod", "pow", "any",
        "all", "format", "chr", "ord", "hex", "oct", "bin", "slice", "complex", "memoryview",
        "Exception", "BaseException", "ValueError", "TypeError", "KeyError", "IndexError",
        "AttributeError", "NameError", "RuntimeError", "StopIteration", "OSError", "IOError",
        "FileNotFoundError", "ImportError", "ModuleNotFoundError", "ZeroDivisionError",
        "ArithmeticError", "AssertionError", "NotImplementedError", "NotImplemented",
        "__name__", "__file__", "__main__", "__doc__", "__init__",
        // conventional receivers
        "self", "cls",
    };
    return names;
}

struct Token {
    std::string text;
    int line;
    bool after_dot;       // attribute member, not a root reference
    char next_sig_char;   // next significant character, 0 at EOF
    char next_sig_char2;  // the one after, for '==' vs '='
    int paren_depth;
    std::string prev;     // previous token text ("" at statement start)
    char prev_sig_char;   // previous significant character on the line
};

struct PyScan {
    std::vector<Token> tokens;
    std::set<std::string> defined;
    std::vector<std::pair<std::string, int>> references;  // ordered, with line
    struct Import {
        std::string module;   // dotted path
        std::string line_text;
        int line;
        bool from_form;       // from M import ...
        bool has_alias;       // import M as x
        std::string alias;
    };
    std::vector<Import> imports;
    bool wildcard_import = false;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> tokenize_python(const std::string& source) {
    std::vector<Token> tokens;
    int line = 1;
    int depth = 0;
    char prev_sig = '\n';
    std::string prev_token;
    bool statement_start = true;

    size_t i = 0;
    const size_t n = source.size();
    auto peek_sig = [&](size_t from, char* c1, char* c2) {
        *c1 = 0;
        *c2 = 0;
        size_t j = from;
        while (j < n && (source[j] == ' ' || source[j] == '\t')) ++j;
        if (j < n) *c1 = source[j];
        if (j + 1 < n) *c2 = source[j + 1];
    };

    while (i < n) {
        char c = source[i];
        if (c == '\n') {
            ++line;
            if (depth == 0) {
                statement_start = true;
                prev_token.clear();
            }
            prev_sig = '\n';
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '#') {
            while (i < n && source[i] != '\n') ++i;
            continue;
        }
        if (c == '\'' || c == '"') {
            char quote = c;
            bool triple = i + 2 < n && source[i + 1] == quote && source[i + 2] == quote;
            i += triple ? 3 : 1;
            while (i < n) {
                if (source[i] == '\\') {
                    i += 2;
                    continue;
                }
                if (source[i] == '\n') ++line;
                if (source[i] == quote) {
                    if (!triple) {
                        ++i;
                        break;
                    }
                    if (i + 2 < n && source[i + 1] == quote && source[i + 2] == quote) {
                        i += 3;
                        break;
                    }
                }
                ++i;
            }
            prev_sig = '"';
            statement_start = false;
            continue;
        }
        if (ident_start(c)) {
            size_t start = i;
            while (i < n && ident_char(source[i])) ++i;
            std::string word = source.substr(start, i - start);
            // string prefix like f"...", rb'...'
            if (i < n && (source[i] == '"' || source[i] == '\'') && word.size() <= 2) {
                bool prefix = true;
                for (char p : word) {
                    char lp = static_cast<char>(std::tolower(static_cast<unsigned char>(p)));
                    if (lp != 'r' && lp != 'b' && lp != 'u' && lp != 'f') prefix = false;
                }
                if (prefix) continue;  // the string branch will consume it next
            }
            Token tok;
            tok.text = word;
            tok.line = line;
            tok.after_dot = prev_sig == '.';
            tok.paren_depth = depth;
            tok.prev = statement_start ? "" : prev_token;
            tok.prev_sig_char = prev_sig;
            peek_sig(i, &tok.next_sig_char, &tok.next_sig_char2);
            tokens.push_back(tok);
            prev_token = word;
            prev_sig = 'a';
            statement_start = false;
            continue;
        }
        if (c == '(' || c == '[' || c == '{') ++depth;
        if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
        prev_sig = c;
        statement_start = false;
        ++i;
    }
    return tokens;
}

// Single-line import forms; parenthesized continuations are out of scope for
// the lexical pass and surface as skipped notes downstream.
void scan_imports(const std::string& source, PyScan& scan) {
    const auto lines = split_lines(source);
    for (size_t idx = 0; idx < lines.size(); ++idx) {
        std::string t = trim(lines[idx]);
        size_t hash = t.find('#');
        if (hash != std::string::npos) t = rtrim(t.substr(0, hash));
        const int line_no = static_cast<int>(idx) + 1;

        if (t.rfind("import ", 0) == 0) {
            std::string rest = t.substr(7);
            std::stringstream parts(rest);
            std::string clause;
            while (std::getline(parts, clause, ',')) {
                clause = trim(clause);
                if (clause.empty()) continue;
                PyScan::Import imp;
                imp.line = line_no;
                imp.line_text = trim(lines[idx]);
                imp.from_form = false;
                size_t as_pos = clause.find(" as ");
                if (as_pos != std::string::npos) {
                    imp.module = trim(clause.substr(0, as_pos));
                    imp.alias = trim(clause.substr(as_pos + 4));
                    imp.has_alias = true;
                    scan.defined.insert(imp.alias);
                } else {
                    imp.module = clause;
                    imp.has_alias = false;
                    size_t dot = clause.find('.');
                    scan.defined.insert(dot == std::string::npos ? clause
                                                                 : clause.substr(0, dot));
                }
                scan.imports.push_back(std::move(imp));
            }
            continue;
        }
        if (t.rfind("from ", 0) == 0) {
            size_t import_pos = t.find(" import ");
            if (import_pos == std::string::npos) continue;
            PyScan::Import imp;
            imp.line = line_no;
            imp.line_text = trim(lines[idx]);
            imp.from_form = true;
            imp.module = trim(t.substr(5, import_pos - 5));
            scan.imports.push_back(imp);
            std::string names = t.substr(import_pos + 8);
            if (trim(names) == "*") {
                scan.wildcard_import = true;
                continue;
            }
            for (char strip : {'(', ')'}) {
                names.erase(std::remove(names.begin(), names.end(), strip), names.end());
            }
            std::stringstream parts(names);
            std::string clause;
            while (std::getline(parts, clause, ',')) {
                clause = trim(clause);
                if (clause.empty()) continue;
                size_t as_pos = clause.find(" as ");
                scan.defined.insert(as_pos != std::string::npos
                                        ? trim(clause.substr(as_pos + 4))
                                        : clause);
            }
        }
    }
}

PyScan scan_python(const std::string& source) {
    PyScan scan;
    scan.tokens = tokenize_python(source);
    scan_imports(source, scan);

    const auto& tokens = scan.tokens;
    for (size_t i = 0; i < tokens.size(); ++i) {
        const Token& tok = tokens[i];
        if (tok.prev == "def" || tok.prev == "class") {
            scan.defined.insert(tok.text);
            continue;
        }
        // def parameters: identifiers right after ( , * inside the def parens
        if (tok.paren_depth > 0 &&
            (tok.prev_sig_char == '(' || tok.prev_sig_char == ',' || tok.prev_sig_char == '*')) {
            // find whether this paren group belongs to a def on the same line
            for (size_t j = i; j-- > 0;) {
                if (tokens[j].line != tok.line && tokens[j].paren_depth == 0) break;
                if (tokens[j].prev == "def") {
                    scan.defined.insert(tok.text);
                    break;
                }
                if (j == 0) break;
            }
        }
        if (tok.prev == "as" || tok.prev == "for" || tok.prev == "lambda" ||
            tok.prev == "global" || tok.prev == "nonlocal") {
            scan.defined.insert(tok.text);
            continue;
        }
        // assignment target at statement head: NAME = ... / NAME: T = ... /
        // NAME, OTHER = ...
        if (tok.prev.empty() && !tok.after_dot) {
            if ((tok.next_sig_char == '=' && tok.next_sig_char2 != '=') ||
                tok.next_sig_char == ':' || tok.next_sig_char == ',') {
                scan.defined.insert(tok.text);
            }
        }
        // tuple-unpack continuation: ", NAME =" or ", NAME ="-chain at depth 0
        if (!tok.after_dot && tok.paren_depth == 0 && tok.prev_sig_char == ',' &&
            (tok.next_sig_char == '=' || tok.next_sig_char == ',')) {
            scan.defined.insert(tok.text);
        }
    }

    std::unordered_set<std::string> import_heads;
    for (size_t i = 0; i < tokens.size(); ++i) {
        const Token& tok = tokens[i];
        if (python_noise().count(tok.text)) continue;
        if (tok.after_dot) continue;
        if (tok.prev == "def" || tok.prev == "class" || tok.prev == "as") continue;
        // skip identifiers that are part of import statements entirely
        bool in_import_stmt = false;
        for (size_t j = i + 1; j-- > 0;) {
            if (tokens[j].line != tok.line) break;
            if (tokens[j].text == "import" || tokens[j].text == "from") {
                in_import_stmt = true;
                break;
            }
            if (j == 0) break;
        }
        if (in_import_stmt) continue;
        // keyword argument name: foo(name=...) inside parens
        if (tok.paren_depth > 0 && tok.next_sig_char == '=' && tok.next_sig_char2 != '=') {
            continue;
        }
        scan.references.push_back({tok.text, tok.line});
    }
    return scan;
}

}  // namespace

// ---------------- manifest ----------------

ProjectManifest build_manifest(const fs::path& fixture_root,
                               std::map<std::string, std::string> known_external,
                               const std::string& source_root_rel) {
    ProjectManifest manifest;
    manifest.known_external = std::move(known_external);
    manifest.source_root = source_root_rel;

    if (!fs::is_directory(fixture_root)) {
        throw ConfigError("fixture root is not a directory: " + fixture_root.string());
    }

    std::vector<std::string> roots = {""};  // relative dirs acting as import roots
    for (auto it = fs::recursive_directory_iterator(fixture_root);
         it != fs::recursive_directory_iterator(); ++it) {
        if (it->is_regular_file() && it->path().filename() == "__init__.py") {
            std::string rel =
                fs::relative(it->path().parent_path(), fixture_root).generic_string();
            if (rel != ".") {
                manifest.package_dirs.push_back(rel);
                roots.push_back(rel);
            }
        }
    }
    std::sort(manifest.package_dirs.begin(), manifest.package_dirs.end());
    std::sort(roots.begin(), roots.end());

    for (auto it = fs::recursive_directory_iterator(fixture_root);
         it != fs::recursive_directory_iterator(); ++it) {
        if (!it->is_regular_file() || it->path().extension() != ".py") continue;
        std::string rel = fs::relative(it->path(), fixture_root).generic_string();
        for (const auto& root : roots) {
            std::string sub = rel;
            if (!root.empty()) {
                if (sub.rfind(root + "/", 0) != 0) continue;
                sub = sub.substr(root.size() + 1);
            }
            std::string dotted = sub.substr(0, sub.size() - 3);  // strip .py
            std::replace(dotted.begin(), dotted.end(), '/', '.');
            if (dotted == "__init__") continue;
            const std::string init_suffix = ".__init__";
            if (dotted.size() > init_suffix.size() &&
                dotted.compare(dotted.size() - init_suffix.size(), init_suffix.size(),
                               init_suffix) == 0) {
                dotted = dotted.substr(0, dotted.size() - init_suffix.size());
            }
            manifest.module_names.insert(dotted);
            // every dotted prefix is importable as a package path component
            size_t dot = dotted.rfind('.');
            while (dot != std::string::npos) {
                dotted = dotted.substr(0, dot);
                manifest.module_names.insert(dotted);
                dot = dotted.rfind('.');
            }
        }
    }
    return manifest;
}

std::map<std::string, std::string> load_known_external(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read known-external table: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("known-external table " + path.string() + ": " + e.what());
    }
    std::map<std::string, std::string> table;
    for (const auto& [key, value] : j.items()) {
        table[key] = value.get<std::string>();
    }
    return table;
}

// ---------------- repair ----------------

namespace {

constexpr const char* kBootstrapMarker = "# --- path bootstrap ---";

std::string bootstrap_block(const ProjectManifest& manifest) {
    std::string rels = "\"" + manifest.source_root + "\"";
    for (const auto& pkg : manifest.package_dirs) {
        rels += ", \"" + manifest.source_root + "/" + pkg + "\"";
    }
    std::string block;
    block += kBootstrapMarker;
    block += "\n";
    block += "import os as _ae_os\n";
    block += "import sys as _ae_sys\n";
    block += "for _ae_rel in [" + rels + "]:\n";
    block += "    _ae_dir = _ae_os.path.abspath(_ae_os.path.join(\n";
    block += "        _ae_os.path.dirname(_ae_os.path.abspath(__file__)), _ae_rel))\n";
    block += "    if _ae_dir not in _ae_sys.path:\n";
    block += "        _ae_sys.path.insert(0, _ae_dir)\n";
    block += "# --- end path bootstrap ---\n";
    return block;
}

// Longest dotted-suffix match of `missing` against the manifest; empty when
// none, "!ambiguous" sentinel when several candidates tie.
std::string suffix_match(const std::string& missing, const std::set<std::string>& modules) {
    std::vector<std::string> parts;
    std::stringstream ss(missing);
    std::string part;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (size_t k = parts.size(); k >= 1; --k) {
        std::string suffix;
        for (size_t i = parts.size() - k; i < parts.size(); ++i) {
            if (!suffix.empty()) suffix += ".";
            suffix += parts[i];
        }
        std::vector<std::string> candidates;
        for (const auto& m : modules) {
            if (m == suffix) candidates.push_back(m);
            else if (m.size() > suffix.size() + 1 &&
                     m.compare(m.size() - suffix.size() - 1, suffix.size() + 1,
                               "." + suffix) == 0) {
                candidates.push_back(m);
            }
        }
        if (candidates.size() == 1) return candidates[0];
        if (candidates.size() > 1) return "!ambiguous";
    }
    return "";
}

std::string replace_first(const std::string& line, const std::string& from,
                          const std::string& to) {
    size_t pos = line.find(from);
    if (pos == std::string::npos) return line;
    std::string out = line;
    out.replace(pos, from.size(), to);
    return out;
}

}  // namespace

bool is_mutating(const RepairAction& action) {
    return action.kind != RepairKind::SkippedNote;
}

std::pair<TestFile, std::vector<RepairAction>> repair(const TestFile& file,
                                                      const ProjectManifest& manifest) {
    std::vector<RepairAction> actions;
    std::vector<std::string> lines = split_lines(file.source);
    const bool already_bootstrapped =
        file.source.find(kBootstrapMarker) != std::string::npos;

    PyScan scan = scan_python(file.source);

    // (c) rewrite reference-safe import paths onto a unique suffix match
    bool any_project_import = false;
    for (const auto& imp : scan.imports) {
        if (manifest.module_names.count(imp.module)) {
            any_project_import = true;
            continue;
        }
        std::string match = suffix_match(imp.module, manifest.module_names);
        if (match.empty()) continue;  // presumably an external package
        if (match == "!ambiguous") {
            actions.push_back({RepairKind::SkippedNote,
                               "import " + imp.module + " matches several project modules",
                               ""});
            continue;
        }
        std::string old_line = lines[imp.line - 1];
        std::string new_line;
        if (imp.from_form || imp.has_alias) {
            new_line = replace_first(old_line, imp.module, match);
        } else if (imp.module.find('.') == std::string::npos) {
            new_line = replace_first(old_line, "import " + imp.module,
                                     "import " + match + " as " + imp.module);
        } else {
            actions.push_back({RepairKind::SkippedNote,
                               "import " + imp.module + " could map to " + match +
                                   " but a bare dotted import cannot be rewritten safely",
                               ""});
            continue;
        }
        lines[imp.line - 1] = new_line;
        actions.push_back({RepairKind::RewriteModulePath,
                           imp.module + " -> " + match, trim(new_line)});
        any_project_import = true;
    }

    // (a) missing references: known externals first, then project modules
    std::set<std::string> queued_imports;
    std::set<std::string> existing_lines;
    for (const auto& line : lines) existing_lines.insert(trim(line));

    std::vector<std::string> import_lines;
    std::set<std::string> seen_names;
    for (const auto& [name, line] : scan.references) {
        if (!seen_names.insert(name).second) continue;
        if (scan.defined.count(name)) continue;
        auto known = manifest.known_external.find(name);
        if (known != manifest.known_external.end()) {
            if (existing_lines.count(trim(known->second)) || queued_imports.count(known->second)) {
                continue;
            }
            queued_imports.insert(known->second);
            import_lines.push_back(known->second);
            actions.push_back({RepairKind::AddImport,
                               "missing name '" + name + "'", known->second});
            continue;
        }
        if (manifest.module_names.count(name)) {
            std::string stmt = "import " + name;
            if (existing_lines.count(stmt) || queued_imports.count(stmt)) continue;
            queued_imports.insert(stmt);
            import_lines.push_back(stmt);
            actions.push_back({RepairKind::AddImport,
                               "missing project module '" + name + "'", stmt});
            any_project_import = true;
            continue;
        }
        if (scan.wildcard_import) {
            actions.push_back({RepairKind::SkippedNote,
                               "cannot verify '" + name + "' behind a wildcard import", ""});
            continue;
        }
        actions.push_back({RepairKind::SkippedNote,
                           "unresolved name '" + name + "' (line " + std::to_string(line) +
                               ")",
                           ""});
    }

    // (b) path bootstrap when the file touches project modules
    std::string preamble;
    if (any_project_import && !already_bootstrapped) {
        preamble = bootstrap_block(manifest);
        actions.push_back({RepairKind::AddPathBootstrap,
                           "module search path -> " + manifest.source_root, preamble});
    }

    std::string rebuilt = preamble;
    for (const auto& stmt : import_lines) rebuilt += stmt + "\n";
    rebuilt += join(lines, "\n");

    TestFile repaired;
    repaired.virtual_path = file.virtual_path;
    repaired.source = rebuilt;
    repaired.stage = TestStage::Repaired;
    return {repaired, actions};
}

// ---------------- failure classification ----------------

const char* failure_class_name(FailureClass c) {
    switch (c) {
        case FailureClass::None: return "none";
        case FailureClass::Dependency: return "dependency";
        case FailureClass::Semantic: return "semantic";
        case FailureClass::Harness: return "harness";
    }
    return "none";
}

std::optional<FailureClass> failure_class_from(const std::string& name) {
    if (name == "none") return FailureClass::None;
    if (name == "dependency") return FailureClass::Dependency;
    if (name == "semantic") return FailureClass::Semantic;
    if (name == "harness") return FailureClass::Harness;
    return std::nullopt;
}

FailureClass classify_failure(const testrun::RunResult& run) {
    if (run.harness_error || run.timed_out) return FailureClass::Harness;

    static const std::unordered_set<std::string> dependency_signatures = {
        "ModuleNotFoundError", "ImportError"};
    static const std::unordered_set<std::string> semantic_signatures = {
        "NameError", "AttributeError", "TypeError", "UnboundLocalError"};

    if (run.collection_error) {
        if (dependency_signatures.count(*run.collection_error)) {
            return FailureClass::Dependency;
        }
        return FailureClass::Semantic;
    }
    if (run.executed >= 1) {
        for (const auto& sig : run.runtime_errors) {
            if (semantic_signatures.count(sig)) return FailureClass::Semantic;
        }
        return FailureClass::None;
    }
    // Nothing ran and nothing import-failed: the content itself is unusable
    // (no tests, or everything skipped).
    return FailureClass::Semantic;
}

}  // namespace acteval::postprocess

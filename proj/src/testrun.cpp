#include "acteval/testrun.hpp"

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>
#include <thread>

#include "acteval/errors.hpp"
#include "json.hpp"

namespace acteval::testrun {

using nlohmann::json;
namespace fs = std::filesystem;

CoverageReading make_coverage(const std::string& path, int lines_total, int lines_hit) {
    CoverageReading c;
    c.path = path;
    c.lines_total = lines_total;
    c.lines_hit = lines_hit;
    c.percent = lines_total > 0 ? 100.0 * lines_hit / lines_total : 0.0;
    return c;
}

RunResult parse_result_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw HarnessError("result file missing: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw HarnessError("result file malformed: " + std::string(e.what()));
    }
    RunResult r;
    try {
        r.collected = j.at("collected").get<int>();
        r.executed = j.at("executed").get<int>();
        r.passed = j.at("passed").get<int>();
        r.failed = j.at("failed").get<int>();
        if (j.contains("collection_error") && !j["collection_error"].is_null()) {
            r.collection_error = j["collection_error"].at("signature").get<std::string>();
        }
        for (const auto& e : j.value("runtime_errors", json::array())) {
            r.runtime_errors.push_back(e.at("signature").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw HarnessError("result file schema violation: " + std::string(e.what()));
    }
    return r;
}

std::optional<CoverageReading> parse_coverage_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    json j;
    try {
        in >> j;
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (!j.contains("executable_lines") || !j.contains("hit_lines")) return std::nullopt;
    std::set<int> executable;
    for (const auto& n : j["executable_lines"]) executable.insert(n.get<int>());
    int hit = 0;
    std::set<int> seen;
    for (const auto& n : j["hit_lines"]) {
        int line = n.get<int>();
        if (executable.count(line) && seen.insert(line).second) ++hit;
    }
    return make_coverage(j.value("path", std::string()), static_cast<int>(executable.size()),
                         hit);
}

namespace {

std::string substitute(const std::string& token, const fs::path& workdir,
                       const fs::path& testfile, const fs::path& resultfile,
                       const fs::path& covfile, const std::string& covtarget) {
    std::string out = token;
    auto replace_all = [&out](const std::string& from, const std::string& to) {
        size_t pos = 0;
        while ((pos = out.find(from, pos)) != std::string::npos) {
            out.replace(pos, from.size(), to);
            pos += to.size();
        }
    };
    replace_all("{workdir}", workdir.string());
    replace_all("{testfile}", testfile.string());
    replace_all("{resultfile}", resultfile.string());
    replace_all("{covfile}", covfile.string());
    replace_all("{covtarget}", covtarget);
    return out;
}

}  // namespace

std::pair<RunResult, std::optional<CoverageReading>> execute_tests(
    const fs::path& testfile, const fs::path& workdir, const RunnerAdapterConfig& cfg,
    const std::string& coverage_target) {
    RunResult result;
    const auto started = std::chrono::steady_clock::now();

    const fs::path resultfile = workdir / "run_result.json";
    const fs::path covfile = workdir / "run_coverage.json";
    std::error_code ec;
    fs::remove(resultfile, ec);
    fs::remove(covfile, ec);

    std::vector<std::string> argv_strings;
    argv_strings.reserve(cfg.command_template.size());
    for (const auto& token : cfg.command_template) {
        argv_strings.push_back(
            substitute(token, workdir, testfile, resultfile, covfile, coverage_target));
    }
    if (argv_strings.empty()) {
        result.harness_error = "spawn_failed";
        return {result, std::nullopt};
    }

    std::vector<char*> argv;
    for (auto& s : argv_strings) argv.push_back(s.data());
    argv.push_back(nullptr);

    pid_t pid = fork();
    if (pid < 0) {
        result.harness_error = "spawn_failed";
        return {result, std::nullopt};
    }
    if (pid == 0) {
        // Child: own process group so the whole tree can be killed on timeout.
        setpgid(0, 0);
        if (chdir(workdir.c_str()) != 0) _exit(127);
        for (const auto& [key, value] : cfg.env) {
            setenv(key.c_str(), value.c_str(), 1);
        }
        // Adapter output is part of the trial, not of the harness log. Redirect
        // at the fd level; stdio-level freopen would flush buffers inherited
        // from the parent into the shared pipe first.
        int devnull = open("/dev/null", O_WRONLY);
        if (devnull >= 0) {
            dup2(devnull, STDOUT_FILENO);
            dup2(devnull, STDERR_FILENO);
            if (devnull > STDERR_FILENO) close(devnull);
        }
        execvp(argv[0], argv.data());
        _exit(127);
    }
    setpgid(pid, pid);

    const auto deadline = started + cfg.timeout;
    int status = 0;
    bool exited = false;
    for (;;) {
        pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            exited = true;
            break;
        }
        if (r < 0) break;
        if (std::chrono::steady_clock::now() >= deadline) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    if (!exited) {
        kill(-pid, SIGKILL);
        waitpid(pid, &status, 0);
        result.timed_out = true;
        result.harness_error = "timeout";
    }
    result.duration = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (result.timed_out) {
        // Partial results may still exist; report what the adapter managed.
        try {
            RunResult parsed = parse_result_file(resultfile);
            parsed.timed_out = true;
            parsed.harness_error = result.harness_error;
            parsed.duration = result.duration;
            result = parsed;
        } catch (const HarnessError&) {
        }
        return {result, std::nullopt};
    }

    if (exited && WIFEXITED(status) && WEXITSTATUS(status) == 127) {
        result.harness_error = "spawn_failed";
        return {result, std::nullopt};
    }

    try {
        RunResult parsed = parse_result_file(resultfile);
        parsed.duration = result.duration;
        result = parsed;
    } catch (const HarnessError&) {
        result.harness_error = "adapter_protocol";
        return {result, std::nullopt};
    }

    std::optional<CoverageReading> coverage = parse_coverage_file(covfile);
    return {result, coverage};
}

}  // namespace acteval::testrun

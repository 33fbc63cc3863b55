#include "acteval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "acteval/errors.hpp"
#include "acteval/util.hpp"

namespace acteval::harness {

namespace fs = std::filesystem;

namespace {

// Recursive copy that skips caches and hidden entries, keeping sandboxes
// byte-stable across runs.
void copy_fixture(const fs::path& from, const fs::path& to) {
    fs::create_directories(to);
    for (const auto& entry : fs::directory_iterator(from)) {
        const std::string name = entry.path().filename().string();
        if (name == "__pycache__" || (!name.empty() && name[0] == '.')) continue;
        if (entry.is_directory()) {
            copy_fixture(entry.path(), to / name);
        } else if (entry.is_regular_file()) {
            fs::copy_file(entry.path(), to / name, fs::copy_options::overwrite_existing);
        }
    }
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw HarnessError("cannot write " + path.string());
    out << content;
    if (!out.flush()) throw HarnessError("write failed: " + path.string());
}

postprocess::GeneratedArtifact fallback_artifact(const std::string& raw) {
    postprocess::GeneratedArtifact artifact;
    artifact.raw = raw;
    artifact.blocks = {""};
    artifact.languages = {""};
    artifact.prose = {"", ""};
    artifact.chosen = 0;
    return artifact;
}

records::TrialRecord harness_fault_record(const CampaignRuntime& runtime, int trial_index,
                                          const std::string& raw,
                                          const std::string& started_at) {
    records::TrialRecord record;
    record.scenario = runtime.spec().scenario.id;
    record.style = runtime.spec().style;
    record.trial_index = trial_index;
    record.prompt_digest = runtime.prompt_digest();
    record.raw_response = raw;
    record.artifact = fallback_artifact(raw);
    record.pre_repair.run.harness_error = "sandbox_setup";
    record.pre_repair.failure = postprocess::FailureClass::Harness;
    record.post_repair.run.harness_error = "sandbox_setup";
    record.post_repair.failure = postprocess::FailureClass::Harness;
    record.started_at = started_at;
    record.finished_at = utc_timestamp();
    return record;
}

}  // namespace

CampaignRuntime::CampaignRuntime(const CampaignSpec& spec) : spec_(spec) {
    if (spec_.n_trials < 1) throw ConfigError("n_trials must be positive");
    if (spec_.parallelism < 1) spec_.parallelism = 1;
    if (!fs::is_directory(spec_.scenario.fixture_root)) {
        throw ConfigError("fixture root missing: " + spec_.scenario.fixture_root.string());
    }
    if (!fs::exists(spec_.scenario.fixture_root / spec_.scenario.coverage_target)) {
        throw ConfigError("coverage target missing: " + spec_.scenario.coverage_target);
    }

    manifest_ = postprocess::build_manifest(spec_.scenario.fixture_root,
                                            spec_.known_external, "../project");

    auto packed = prompt::pack_context(spec_.scenario.fixture_root, {"**/*.py"},
                                       spec_.templates.budget_chars);
    if (spec_.style == prompt::PromptStyle::NaturalLanguage) {
        bundle_ = prompt::build_nl_prompt(spec_.scenario.criteria, std::move(packed.files),
                                          spec_.templates);
    } else {
        if (!spec_.scenario.gherkin_doc) {
            throw ConfigError("scenario " + spec_.scenario.id +
                              " has no feature file for the Gherkin-structured style");
        }
        bundle_ = prompt::build_gs_prompt(*spec_.scenario.gherkin_doc,
                                          std::move(packed.files), spec_.templates);
    }
    digest_ = fnv1a_hex(spec_.templates.system_preamble + "\n" +
                        prompt::serialized_size_probe(bundle_.instruction, bundle_.context));

    if (spec_.backend == BackendMode::Scripted) {
        if (!spec_.scenario.corpus_file) {
            throw ConfigError("scenario " + spec_.scenario.id +
                              " has no response corpus for the scripted backend");
        }
        scripted_ = std::make_unique<gateway::ScriptedBackend>(
            gateway::ScriptedBackend::load(*spec_.scenario.corpus_file));
    } else {
        live_ = std::make_unique<gateway::HttpBackend>(spec_.backend_config);
    }
}

std::string CampaignRuntime::fetch_response(int trial_index) {
    gateway::CompletionRequest request;
    request.model = spec_.backend_config.model;
    request.messages = gateway::encode_bundle(bundle_, spec_.templates.system_preamble);
    if (scripted_) {
        gateway::ScriptKey key{spec_.scenario.id, prompt::style_name(spec_.style),
                               trial_index};
        return scripted_->complete_scripted(request, key).content;
    }
    return live_->complete(request).content;
}

records::TrialRecord run_trial(CampaignRuntime& runtime, int trial_index) {
    const CampaignSpec& spec = runtime.spec();
    const std::string started_at = utc_timestamp();

    std::string raw;
    try {
        raw = runtime.fetch_response(trial_index);
    } catch (const std::exception&) {
        return harness_fault_record(runtime, trial_index, "", started_at);
    }

    try {
        records::TrialRecord record;
        record.scenario = spec.scenario.id;
        record.style = spec.style;
        record.trial_index = trial_index;
        record.prompt_digest = runtime.prompt_digest();
        record.raw_response = raw;
        record.started_at = started_at;

        try {
            record.artifact = postprocess::extract_code(raw);
        } catch (const Error&) {
            record.artifact = fallback_artifact(raw);
        }

        const fs::path sandbox = spec.work_dir / spec.campaign_file.stem() /
                                 ("t" + std::to_string(trial_index));
        std::error_code ec;
        fs::remove_all(sandbox, ec);
        copy_fixture(spec.scenario.fixture_root, sandbox / "project");
        fs::create_directories(sandbox / "pre");
        fs::create_directories(sandbox / "post");

        const std::string coverage_target_abs =
            fs::absolute(sandbox / "project" / spec.scenario.coverage_target).string();

        postprocess::TestFile generated;
        generated.virtual_path = "test_generated.py";
        generated.source = record.artifact.chosen_block();
        generated.stage = postprocess::TestStage::Raw;

        const fs::path pre_file = sandbox / "pre" / "test_generated.py";
        write_file(pre_file, generated.source);
        auto [pre_run, pre_cov] =
            testrun::execute_tests(pre_file, sandbox / "pre", spec.scenario.runner,
                                   coverage_target_abs);
        record.pre_repair.run = pre_run;
        record.pre_repair.failure = postprocess::classify_failure(pre_run);

        auto [repaired, actions] = postprocess::repair(generated, runtime.manifest());
        record.actions = std::move(actions);

        testrun::RunResult post_run;
        std::optional<testrun::CoverageReading> post_cov;
        if (repaired.source == generated.source) {
            // Byte-identical input through the same adapter; rerunning would
            // only repeat the pre-repair result.
            post_run = pre_run;
            post_cov = pre_cov;
        } else {
            const fs::path post_file = sandbox / "post" / "test_generated.py";
            write_file(post_file, repaired.source);
            std::tie(post_run, post_cov) =
                testrun::execute_tests(post_file, sandbox / "post", spec.scenario.runner,
                                       coverage_target_abs);
        }
        if (post_run.executed >= 1) {
            if (post_cov) {
                post_cov->path = spec.scenario.coverage_target;
                record.coverage = post_cov;
            } else {
                post_run.harness_error = "adapter_protocol";
            }
        }
        record.post_repair.run = post_run;
        record.post_repair.failure = postprocess::classify_failure(post_run);

        record.finished_at = utc_timestamp();

        const bool failed = record.post_repair.failure != postprocess::FailureClass::None;
        if (!(spec.keep_failures && failed)) {
            fs::remove_all(sandbox, ec);
        }
        return record;
    } catch (const std::exception&) {
        return harness_fault_record(runtime, trial_index, raw, started_at);
    }
}

std::vector<records::TrialRecord> run_campaign(
    const CampaignSpec& spec,
    const std::function<void(const records::TrialRecord&)>& progress) {
    fs::create_directories(spec.work_dir);
    fs::create_directories(spec.campaign_file.parent_path().empty()
                               ? fs::path(".")
                               : spec.campaign_file.parent_path());

    records::CampaignLock lock(spec.campaign_file);
    CampaignRuntime runtime(spec);

    const std::set<int> existing = records::existing_indices(
        spec.campaign_file, spec.scenario.id, spec.style);
    std::vector<int> pending;
    for (int i = 0; i < spec.n_trials; ++i) {
        if (!existing.count(i)) pending.push_back(i);
    }

    std::mutex mu;
    std::condition_variable cv;
    std::map<int, records::TrialRecord> done;
    std::atomic<size_t> cursor{0};
    std::exception_ptr persist_error;

    auto worker = [&]() {
        while (true) {
            size_t slot = cursor.fetch_add(1);
            if (slot >= pending.size()) return;
            records::TrialRecord record = run_trial(runtime, pending[slot]);
            std::lock_guard<std::mutex> guard(mu);
            done.emplace(record.trial_index, std::move(record));
            cv.notify_all();
        }
    };

    const int n_workers = std::max(
        1, std::min(spec.parallelism, static_cast<int>(pending.size())));
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);

    // Persist strictly in index order as results become available.
    {
        std::unique_lock<std::mutex> guard(mu);
        for (int index : pending) {
            cv.wait(guard, [&] { return done.count(index) > 0; });
            try {
                records::append_record(spec.campaign_file, done.at(index));
                if (progress) progress(done.at(index));
            } catch (...) {
                persist_error = std::current_exception();
                break;
            }
            done.erase(index);
        }
    }
    for (auto& t : threads) t.join();
    if (persist_error) std::rethrow_exception(persist_error);

    return records::load_records(spec.campaign_file);
}

}  // namespace acteval::harness

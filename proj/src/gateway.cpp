#include "acteval/gateway.hpp"

#include <fstream>
#include <thread>

#include "acteval/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace acteval::gateway {

using nlohmann::json;

std::vector<ChatMessage> encode_bundle(const prompt::PromptBundle& bundle,
                                       const std::string& system_preamble) {
    std::vector<ChatMessage> messages;
    messages.push_back({Role::System, system_preamble});
    messages.push_back(
        {Role::User, prompt::serialized_size_probe(bundle.instruction, bundle.context)});
    return messages;
}

std::string request_to_json(const CompletionRequest& request, const std::string& model) {
    json j;
    j["model"] = model.empty() ? request.model : model;
    j["messages"] = json::array();
    for (const auto& m : request.messages) {
        j["messages"].push_back(
            {{"role", m.role == Role::System ? "system" : "user"}, {"content", m.content}});
    }
    j["temperature"] = request.temperature;
    j["max_tokens"] = request.max_tokens;
    if (request.seed) j["seed"] = *request.seed;
    return j.dump();
}

CompletionResponse response_from_json(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception&) {
        throw BackendError(BackendError::Kind::MalformedResponse,
                           "response body is not valid JSON");
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
        throw BackendError(BackendError::Kind::MalformedResponse,
                           "response has no choices array");
    }
    const auto& choice = j["choices"][0];
    if (!choice.contains("message") || !choice["message"].contains("content") ||
        !choice["message"]["content"].is_string()) {
        throw BackendError(BackendError::Kind::MalformedResponse,
                           "choice has no message.content string");
    }
    CompletionResponse resp;
    resp.content = choice["message"]["content"].get<std::string>();
    std::string reason = choice.value("finish_reason", "stop");
    if (reason == "stop") {
        resp.finish_reason = FinishReason::Stop;
    } else if (reason == "length") {
        resp.finish_reason = FinishReason::Length;
    } else {
        resp.finish_reason = FinishReason::Other;
        resp.finish_detail = reason;
    }
    if (resp.content.empty() && resp.finish_reason == FinishReason::Stop) {
        throw BackendError(BackendError::Kind::MalformedResponse,
                           "empty content with finish_reason stop");
    }
    return resp;
}

RateLimiter::RateLimiter(int max_inflight, int requests_per_window,
                         std::chrono::milliseconds window)
    : max_inflight_(max_inflight), requests_per_window_(requests_per_window), window_(window) {}

void RateLimiter::acquire() {
    std::unique_lock lock(mu_);
    for (;;) {
        auto now = std::chrono::steady_clock::now();
        while (!starts_.empty() && now - starts_.front() >= window_) starts_.pop_front();
        if (inflight_ < max_inflight_ &&
            static_cast<int>(starts_.size()) < requests_per_window_) {
            ++inflight_;
            starts_.push_back(now);
            return;
        }
        if (inflight_ >= max_inflight_) {
            cv_.wait(lock);
        } else {
            auto wake = starts_.front() + window_;
            cv_.wait_until(lock, wake);
        }
    }
}

void RateLimiter::release() {
    {
        std::lock_guard lock(mu_);
        --inflight_;
    }
    cv_.notify_all();
}

namespace {

struct LimiterGuard {
    RateLimiter& limiter;
    explicit LimiterGuard(RateLimiter& l) : limiter(l) { limiter.acquire(); }
    ~LimiterGuard() { limiter.release(); }
};

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

}  // namespace

HttpBackend::HttpBackend(BackendConfig config)
    : config_(std::move(config)),
      limiter_(config_.max_inflight, config_.requests_per_minute, config_.rate_window) {}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    const std::string body = request_to_json(request, config_.model);
    const auto started = std::chrono::steady_clock::now();

    int attempts = 0;
    std::string last_error;
    int last_status = 0;
    while (attempts <= config_.max_retries) {
        if (attempts > 0) {
            auto backoff = config_.retry_backoff_base * (1 << (attempts - 1));
            std::this_thread::sleep_for(backoff);
        }
        ++attempts;

        httplib::Result result = [&] {
            LimiterGuard guard(limiter_);
            httplib::Client client(config_.endpoint_url);
            auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
            client.set_connection_timeout(secs.count() ? secs.count() : 1, 0);
            client.set_read_timeout(secs.count() ? secs.count() : 1, 0);
            httplib::Headers headers;
            if (config_.api_key) {
                headers.emplace("Authorization", "Bearer " + *config_.api_key);
            }
            return client.Post(config_.completions_path, headers, body, "application/json");
        }();

        if (!result) {
            if (result.error() == httplib::Error::ConnectionTimeout ||
                result.error() == httplib::Error::Read) {
                last_error = "timeout";
            } else {
                last_error = httplib::to_string(result.error());
            }
            continue;  // transport errors are retryable
        }
        last_status = result->status;
        if (result->status == 200) {
            CompletionResponse resp = response_from_json(result->body);
            resp.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started);
            resp.retries = attempts - 1;
            return resp;
        }
        if (!retryable_status(result->status)) {
            throw BackendError(BackendError::Kind::HttpStatus,
                               "http status " + std::to_string(result->status),
                               result->status);
        }
        last_error = "http status " + std::to_string(result->status);
    }

    if (last_status != 0) {
        throw BackendError(BackendError::Kind::HttpStatus,
                           "retries exhausted, last: " + last_error, last_status);
    }
    if (last_error == "timeout") {
        throw BackendError(BackendError::Kind::Timeout, "request timed out after retries");
    }
    throw BackendError(BackendError::Kind::Transport, "transport failure: " + last_error);
}

ScriptedBackend::ScriptedBackend(std::map<std::string, std::string> corpus,
                                 std::string default_response)
    : corpus_(std::move(corpus)), default_(std::move(default_response)) {}

std::string ScriptedBackend::map_key(const std::string& scenario, const std::string& style,
                                     int trial) {
    return scenario + "|" + style + "|" + std::to_string(trial);
}

// Corpus file schema:
// {
//   "default": "...",
//   "entries": [
//     {"scenario": "...", "style": "nl|gs|gen",
//      "trials": [0, 3], "trial_ranges": [[10, 19]],
//      "response": "..."  or  "response_file": "relative/path.txt"}
//   ]
// }
ScriptedBackend ScriptedBackend::load(const std::filesystem::path& corpus_file) {
    std::ifstream in(corpus_file);
    if (!in) throw IoError("cannot read corpus file: " + corpus_file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("corpus file " + corpus_file.string() + ": " + e.what());
    }

    auto read_response = [&](const json& entry) -> std::string {
        if (entry.contains("response")) return entry["response"].get<std::string>();
        if (entry.contains("response_file")) {
            auto path = corpus_file.parent_path() / entry["response_file"].get<std::string>();
            std::ifstream rf(path, std::ios::binary);
            if (!rf) throw IoError("cannot read response file: " + path.string());
            std::ostringstream ss;
            ss << rf.rdbuf();
            return ss.str();
        }
        throw ConfigError("corpus entry needs response or response_file");
    };

    std::map<std::string, std::string> corpus;
    for (const auto& entry : j.value("entries", json::array())) {
        const std::string scenario = entry.at("scenario").get<std::string>();
        const std::string style = entry.at("style").get<std::string>();
        const std::string response = read_response(entry);
        for (const auto& t : entry.value("trials", json::array())) {
            corpus[map_key(scenario, style, t.get<int>())] = response;
        }
        for (const auto& range : entry.value("trial_ranges", json::array())) {
            int from = range.at(0).get<int>();
            int to = range.at(1).get<int>();
            for (int t = from; t <= to; ++t) corpus[map_key(scenario, style, t)] = response;
        }
    }
    std::string fallback = j.value("default", std::string("No scripted response available."));
    return ScriptedBackend(std::move(corpus), std::move(fallback));
}

CompletionResponse ScriptedBackend::complete_scripted(const CompletionRequest&,
                                                      const ScriptKey& key) const {
    CompletionResponse resp;
    auto it = corpus_.find(map_key(key.scenario, key.style, key.trial));
    resp.content = it != corpus_.end() ? it->second : default_;
    resp.finish_reason = FinishReason::Stop;
    resp.latency = std::chrono::milliseconds(0);
    return resp;
}

}  // namespace acteval::gateway

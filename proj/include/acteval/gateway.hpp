#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <condition_variable>
#include <optional>
#include <string>
#include <vector>

#include "acteval/prompt.hpp"

namespace acteval::gateway {

enum class Role { System, User };

struct ChatMessage {
    Role role{Role::User};
    std::string content;
};

struct CompletionRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    std::optional<std::int64_t> seed;
    int max_tokens = 1024;
    std::chrono::milliseconds timeout{30000};
};

enum class FinishReason { Stop, Length, Other };

struct CompletionResponse {
    std::string content;
    FinishReason finish_reason{FinishReason::Stop};
    std::string finish_detail;  // raw reason string when Other
    std::chrono::milliseconds latency{0};
    int retries = 0;
};

struct BackendConfig {
    std::string endpoint_url;  // scheme://host[:port]
    std::string completions_path = "/v1/chat/completions";
    std::optional<std::string> api_key;  // from env, never persisted
    std::string model = "default";
    int max_retries = 3;
    std::chrono::milliseconds retry_backoff_base{250};
    int max_inflight = 4;
    int requests_per_minute = 120;
    // Rate window is 60s by contract; shrinkable for tests.
    std::chrono::milliseconds rate_window{60000};
};

// One System preamble message plus one User message holding the instruction
// followed by the banner-serialized context files.
std::vector<ChatMessage> encode_bundle(const prompt::PromptBundle& bundle,
                                       const std::string& system_preamble);

class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

// Shared sliding-window rate limiter plus in-flight cap. Thread-safe.
class RateLimiter {
public:
    RateLimiter(int max_inflight, int requests_per_window, std::chrono::milliseconds window);

    // Blocks until a slot is free, records the request start time.
    void acquire();
    void release();

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int max_inflight_;
    int requests_per_window_;
    std::chrono::milliseconds window_;
    int inflight_ = 0;
    std::deque<std::chrono::steady_clock::time_point> starts_;
};

// Chat-completions HTTP client with retry on transport errors, 429 and 5xx.
// Throws BackendError after retries are exhausted.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config);
    CompletionResponse complete(const CompletionRequest& request) override;

private:
    BackendConfig config_;
    RateLimiter limiter_;
};

// Key for scripted lookup; trial index stratifies the canned corpus.
struct ScriptKey {
    std::string scenario;
    std::string style;  // "nl", "gs", "gen"
    int trial = 0;
};

// Deterministic canned-response corpus. Lookup is total: unknown keys fall
// back to the default response.
class ScriptedBackend {
public:
    ScriptedBackend(std::map<std::string, std::string> corpus, std::string default_response);

    static ScriptedBackend load(const std::filesystem::path& corpus_file);

    CompletionResponse complete_scripted(const CompletionRequest& request,
                                         const ScriptKey& key) const;

    static std::string map_key(const std::string& scenario, const std::string& style, int trial);

private:
    std::map<std::string, std::string> corpus_;
    std::string default_;
};

std::string request_to_json(const CompletionRequest& request, const std::string& model);
CompletionResponse response_from_json(const std::string& body);

}  // namespace acteval::gateway

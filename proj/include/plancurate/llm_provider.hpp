#pragma once

#include "plancurate/errors.hpp"

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace plancurate {

enum class Role { system, user, assistant };

std::string_view to_string(Role r);
Role parse_role(std::string_view text);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// Sampling parameters. Defaults follow the detection experiment settings
/// (temperature 1, 2048 tokens, top-p 1) and are used engine-wide.
struct RequestParams {
    double temperature = 1.0;
    int max_tokens = 2048;
    double top_p = 1.0;

    friend bool operator==(const RequestParams&, const RequestParams&) = default;
};

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    RequestParams params;
    std::string tag;  ///< purpose label for logging, e.g. "detect_subtask"

    /// Throws bad_request on out-of-range parameters or empty system/user text.
    void check() const;

    [[nodiscard]] const ChatMessage* last_user_message() const;
    [[nodiscard]] Json to_json() const;
};

struct Usage {
    std::size_t prompt_chars = 0;
    std::size_t response_chars = 0;
};

struct Completion {
    std::string text;
    Usage usage;
    std::int64_t latency_ms = 0;
};

/// Chat-completion boundary. Implementations override do_complete; the
/// public entry validates the request first.
class Provider {
public:
    virtual ~Provider() = default;

    Completion complete(const CompletionRequest& request) {
        request.check();
        return do_complete(request);
    }

    [[nodiscard]] virtual std::string model() const = 0;
    /// Deterministic providers are driven sequentially (scripted replay).
    [[nodiscard]] virtual bool deterministic() const = 0;

private:
    virtual Completion do_complete(const CompletionRequest& request) = 0;
};

struct ScriptStep {
    std::optional<std::string> match;  ///< must occur in the last user message
    std::string response;
};

/// Fixture format: {"steps": [{"match": "...", "response": "..."}, ...]}.
/// `match` may be null or omitted.
struct ProviderScript {
    std::vector<ScriptStep> steps;
    std::size_t cursor = 0;

    static ProviderScript load(const std::filesystem::path& path);
    static ProviderScript from_json(const Json& j);
    [[nodiscard]] Json to_json() const;
};

/// Replays scripted responses in order. Every request is captured so tests
/// can inspect outgoing prompts.
class MockProvider final : public Provider {
public:
    explicit MockProvider(ProviderScript script = {}) : script_(std::move(script)) {}

    void push(ScriptStep step);
    void push(std::optional<std::string> match, std::string response) {
        push(ScriptStep{std::move(match), std::move(response)});
    }

    [[nodiscard]] std::vector<CompletionRequest> requests() const;
    [[nodiscard]] std::size_t cursor() const;
    [[nodiscard]] std::size_t remaining() const;
    void clear_requests();

    [[nodiscard]] std::string model() const override { return "mock"; }
    [[nodiscard]] bool deterministic() const override { return true; }

private:
    Completion do_complete(const CompletionRequest& request) override;

    mutable std::mutex mutex_;
    ProviderScript script_;
    std::vector<CompletionRequest> requests_;
};

struct LiveProviderConfig {
    std::string endpoint;  ///< full chat-completions URL
    std::string model;
    std::string api_key_env = "OPENAI_API_KEY";  ///< name of the variable holding the key
    double timeout_seconds = 60.0;
    double retry_backoff_seconds = 2.0;

    /// Reads PLANCURATE_ENDPOINT, PLANCURATE_MODEL, PLANCURATE_API_KEY_ENV and
    /// PLANCURATE_TIMEOUT on top of `base`.
    static LiveProviderConfig from_env(LiveProviderConfig base);
    static LiveProviderConfig from_env() { return from_env(LiveProviderConfig{}); }
    /// JSON file with the same keys as the struct fields. Never holds the key.
    static LiveProviderConfig load(const std::filesystem::path& path);
};

/// One HTTP round-trip per call in the common chat-completion wire shape.
/// Transient failures (5xx, timeouts) are retried once after a backoff.
class LiveProvider final : public Provider {
public:
    explicit LiveProvider(LiveProviderConfig config);

    [[nodiscard]] std::string model() const override { return config_.model; }
    [[nodiscard]] bool deterministic() const override { return false; }

    [[nodiscard]] static Json build_body(const CompletionRequest& request, const std::string& model);
    [[nodiscard]] static std::string parse_body(const std::string& body);

private:
    Completion do_complete(const CompletionRequest& request) override;
    Completion attempt(const CompletionRequest& request) const;

    LiveProviderConfig config_;
    std::string scheme_host_port_;
    std::string path_;
};

}  // namespace plancurate

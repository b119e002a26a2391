#include "plancurate/llm_provider.hpp"

#include "plancurate/util.hpp"

#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

namespace plancurate {

namespace {

constexpr EnumNames<Role, 3> kRoleNames{{{
    {Role::system, "system"},
    {Role::user, "user"},
    {Role::assistant, "assistant"},
}}};

std::size_t prompt_chars(const CompletionRequest& request) {
    std::size_t n = 0;
    for (const auto& m : request.messages) n += m.content.size();
    return n;
}

std::string excerpt(const std::string& body) {
    return body.size() <= 200 ? body : body.substr(0, 200) + "...";
}

}  // namespace

std::string_view to_string(Role r) { return kRoleNames.name(r); }

Role parse_role(std::string_view text) {
    return kRoleNames.parse(text, ErrorCode::corrupt_session, "role");
}

void CompletionRequest::check() const {
    if (params.temperature < 0.0 || params.temperature > 2.0) {
        throw Error(ErrorCode::bad_request, "temperature must be in [0, 2]");
    }
    if (params.max_tokens < 1) throw Error(ErrorCode::bad_request, "max_tokens must be >= 1");
    if (params.top_p <= 0.0 || params.top_p > 1.0) {
        throw Error(ErrorCode::bad_request, "top_p must be in (0, 1]");
    }
    if (messages.empty()) throw Error(ErrorCode::bad_request, "request has no messages");
    for (const auto& m : messages) {
        if (m.role != Role::assistant && m.content.empty()) {
            throw Error(ErrorCode::bad_request, "system and user messages must be non-empty");
        }
    }
}

const ChatMessage* CompletionRequest::last_user_message() const {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::user) return &*it;
    }
    return nullptr;
}

Json CompletionRequest::to_json() const {
    Json msgs = Json::array();
    for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return Json{{"tag", tag},
                {"temperature", params.temperature},
                {"max_tokens", params.max_tokens},
                {"top_p", params.top_p},
                {"messages", std::move(msgs)}};
}

// ---------------------------------------------------------------------------
// ProviderScript / MockProvider

ProviderScript ProviderScript::from_json(const Json& j) {
    ProviderScript script;
    try {
        for (const auto& s : j.at("steps")) {
            ScriptStep step;
            if (s.contains("match") && !s.at("match").is_null()) step.match = s.at("match").get<std::string>();
            step.response = s.at("response").get<std::string>();
            script.steps.push_back(std::move(step));
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::bad_config, std::string("malformed provider script: ") + e.what());
    }
    return script;
}

ProviderScript ProviderScript::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot read script " + path.string(), Json{{"path", path.string()}});
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::bad_config, "provider script is not valid JSON: " + std::string(e.what()));
    }
    return from_json(j);
}

Json ProviderScript::to_json() const {
    Json steps_json = Json::array();
    for (const auto& s : steps) {
        steps_json.push_back({{"match", s.match ? Json(*s.match) : Json(nullptr)}, {"response", s.response}});
    }
    return Json{{"steps", std::move(steps_json)}};
}

void MockProvider::push(ScriptStep step) {
    std::lock_guard lock(mutex_);
    script_.steps.push_back(std::move(step));
}

std::vector<CompletionRequest> MockProvider::requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

std::size_t MockProvider::cursor() const {
    std::lock_guard lock(mutex_);
    return script_.cursor;
}

std::size_t MockProvider::remaining() const {
    std::lock_guard lock(mutex_);
    return script_.steps.size() - script_.cursor;
}

void MockProvider::clear_requests() {
    std::lock_guard lock(mutex_);
    requests_.clear();
}

Completion MockProvider::do_complete(const CompletionRequest& request) {
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    if (script_.cursor >= script_.steps.size()) {
        throw Error(ErrorCode::script_exhausted, "provider script exhausted",
                    Json{{"tag", request.tag}, {"steps", script_.steps.size()}});
    }
    const ScriptStep& step = script_.steps[script_.cursor];
    if (step.match) {
        const ChatMessage* last = request.last_user_message();
        if (last == nullptr || last->content.find(*step.match) == std::string::npos) {
            throw Error(ErrorCode::script_mismatch,
                        "script step " + std::to_string(script_.cursor) + " expected '" + *step.match + "'",
                        Json{{"expected", *step.match}, {"step", script_.cursor}, {"tag", request.tag}});
        }
    }
    ++script_.cursor;
    Completion c;
    c.text = step.response;
    c.usage = {prompt_chars(request), step.response.size()};
    return c;
}

// ---------------------------------------------------------------------------
// LiveProvider

LiveProviderConfig LiveProviderConfig::from_env(LiveProviderConfig base) {
    if (const char* v = std::getenv("PLANCURATE_ENDPOINT")) base.endpoint = v;
    if (const char* v = std::getenv("PLANCURATE_MODEL")) base.model = v;
    if (const char* v = std::getenv("PLANCURATE_API_KEY_ENV")) base.api_key_env = v;
    if (const char* v = std::getenv("PLANCURATE_TIMEOUT")) {
        try {
            base.timeout_seconds = std::stod(v);
        } catch (const std::exception&) {
            throw Error(ErrorCode::bad_config, "PLANCURATE_TIMEOUT is not a number");
        }
    }
    return base;
}

LiveProviderConfig LiveProviderConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot read provider config " + path.string());
    LiveProviderConfig cfg;
    try {
        const Json j = Json::parse(in);
        cfg.endpoint = j.value("endpoint", cfg.endpoint);
        cfg.model = j.value("model", cfg.model);
        cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
        cfg.timeout_seconds = j.value("timeout_seconds", cfg.timeout_seconds);
        cfg.retry_backoff_seconds = j.value("retry_backoff_seconds", cfg.retry_backoff_seconds);
        if (j.contains("api_key")) {
            throw Error(ErrorCode::bad_config, "provider config must not contain the API key; use api_key_env");
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::bad_config, std::string("malformed provider config: ") + e.what());
    }
    return cfg;
}

LiveProvider::LiveProvider(LiveProviderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw Error(ErrorCode::bad_config, "provider endpoint is not configured");
    if (config_.model.empty()) throw Error(ErrorCode::bad_config, "provider model is not configured");
    const auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::bad_config, "endpoint must be an absolute URL: " + config_.endpoint);
    }
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    scheme_host_port_ = config_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
}

Json LiveProvider::build_body(const CompletionRequest& request, const std::string& model) {
    Json msgs = Json::array();
    for (const auto& m : request.messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return Json{{"model", model},
                {"messages", std::move(msgs)},
                {"temperature", request.params.temperature},
                {"top_p", request.params.top_p},
                {"max_tokens", request.params.max_tokens}};
}

std::string LiveProvider::parse_body(const std::string& body) {
    try {
        const Json j = Json::parse(body);
        const auto& content = j.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const Json::exception&) {
        throw Error(ErrorCode::provider_http, "malformed chat-completion response",
                    Json{{"status", 200}, {"body", excerpt(body)}});
    }
}

Completion LiveProvider::attempt(const CompletionRequest& request) const {
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration<double>(config_.timeout_seconds);
    const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(secs);
    client.set_connection_timeout(usec);
    client.set_read_timeout(usec);
    client.set_write_timeout(usec);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const std::string payload = build_body(request, config_.model).dump();

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, payload, "application/json");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);

    if (!res) {
        throw Error(ErrorCode::provider_timeout,
                    "provider unreachable or timed out: " + httplib::to_string(res.error()),
                    Json{{"endpoint", config_.endpoint}, {"timeout_seconds", config_.timeout_seconds}});
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::provider_http, "provider returned HTTP " + std::to_string(res->status),
                    Json{{"status", res->status}, {"body", excerpt(res->body)}});
    }
    Completion c;
    c.text = parse_body(res->body);
    c.usage = {prompt_chars(request), c.text.size()};
    c.latency_ms = elapsed.count();
    return c;
}

Completion LiveProvider::do_complete(const CompletionRequest& request) {
    try {
        return attempt(request);
    } catch (const Error& e) {
        const bool transient =
            e.code() == ErrorCode::provider_timeout ||
            (e.code() == ErrorCode::provider_http && e.detail().value("status", 0) >= 500);
        if (!transient) throw;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(config_.retry_backoff_seconds));
    return attempt(request);
}

}  // namespace plancurate

#pragma once

#include "plancurate/curation_engine.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace httplib {
class Server;
}

namespace plancurate {

/// HTTP status for an error code. Provider failures map to 503 and are
/// reported as provider_unavailable.
int http_status(ErrorCode code) noexcept;

/// {code, message, detail} as sent over the wire.
Json error_body(const Error& e);

struct ServiceConfig {
    std::filesystem::path sessions_dir = "sessions";
    AblationMode default_mode = AblationMode::full_curation;
    DetectionVariant strategy = PromptLibrary::kProductionVariant;
    bool deterministic_ids = false;  ///< session-1, session-2, ... instead of random ids
    int timeout_seconds = 120;
};

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    Json body;
};

/// Routes requests onto the engine. Every mutating request runs on a copy
/// of the session that is persisted and published only when the whole
/// request succeeds. Requests on the same session are serialized.
class Service {
public:
    Service(Provider& provider, ServiceConfig config, const PromptLibrary& prompts = PromptLibrary::builtin(),
            Clock clock = Clock{});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    ApiResponse handle(const ApiRequest& request);

    /// Installs a catch-all route on `server` that forwards to handle().
    void mount(httplib::Server& server);

    /// Snapshot of a loaded or on-disk session.
    [[nodiscard]] std::optional<Session> snapshot(const std::string& id);

    [[nodiscard]] const ServiceConfig& config() const { return config_; }

private:
    struct Slot;

    ApiResponse create_session(const Json& body);
    ApiResponse route_session(const std::string& id, const std::vector<std::string>& rest, const ApiRequest& req);
    std::shared_ptr<Slot> slot_for(const std::string& id);
    std::string next_id();
    void persist(Slot& slot, Session next);

    Provider& provider_;
    ServiceConfig config_;
    CurationEngine engine_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
    std::uint64_t counter_ = 0;
};

}  // namespace plancurate

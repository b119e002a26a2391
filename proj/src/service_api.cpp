#include "plancurate/service_api.hpp"

#include <httplib.h>

#include <random>

namespace plancurate {

namespace {

Json parse_body(const std::string& body) {
    if (is_blank(body)) return Json::object();
    Json j;
    try {
        j = Json::parse(body);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::bad_request, std::string("request body is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::bad_request, "request body must be a JSON object");
    return j;
}

std::optional<std::string> opt_string(const Json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw Error(ErrorCode::bad_request, std::string("'") + field + "' must be a string");
    return it->get<std::string>();
}

std::string req_string(const Json& j, const char* field) {
    auto v = opt_string(j, field);
    if (!v) throw Error(ErrorCode::bad_request, std::string("'") + field + "' is required");
    return *v;
}

std::optional<std::vector<std::string>> opt_string_list(const Json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_array()) throw Error(ErrorCode::bad_request, std::string("'") + field + "' must be a list");
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) throw Error(ErrorCode::bad_request, std::string("'") + field + "' must hold strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::vector<ElicitedAnswer> parse_answers(const Json& j) {
    std::vector<ElicitedAnswer> out;
    auto it = j.find("answers");
    if (it == j.end() || it->is_null()) return out;
    if (!it->is_array()) throw Error(ErrorCode::bad_request, "'answers' must be a list");
    for (const auto& a : *it) {
        if (!a.is_object()) throw Error(ErrorCode::bad_request, "each answer must be an object");
        out.push_back({req_string(a, "question_id"), opt_string(a, "text"), opt_string(a, "file_name")});
    }
    return out;
}

Json questions_json(const std::vector<ElicitationQuestion>& qs) {
    Json arr = Json::array();
    for (const auto& q : qs) arr.push_back({{"id", q.id}, {"question", q.question}, {"expects_file", q.expects_file}});
    return arr;
}

Json key_infos_json(const std::vector<ContextKeyInfo>& infos, Scope scope) {
    Json arr = Json::array();
    for (const auto& k : infos) {
        arr.push_back({{"key", k.key},
                       {"scope", to_string(scope)},
                       {"provenance", to_string(k.provenance)},
                       {"source_node", k.source_node ? Json(*k.source_node) : Json(nullptr)}});
    }
    return arr;
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto slash = path.find('/', start);
        const auto part = path.substr(start, slash == std::string_view::npos ? path.npos : slash - start);
        if (!part.empty()) out.push_back(httplib::detail::decode_url(std::string(part), false));
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return out;
}

[[noreturn]] void route_not_found(const ApiRequest& req) {
    throw Error(ErrorCode::not_found, "no route for " + req.method + " " + req.path);
}

const DraftCandidate& draft_for(const Session& s, const NodeId& node, const Json& body) {
    (void)s.tree().node(node);
    const DraftCandidate* d = nullptr;
    if (auto it = body.find("revision"); it != body.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw Error(ErrorCode::bad_request, "'revision' must be an integer");
        d = s.find_draft(node, it->get<int>());
    } else {
        d = s.latest_draft(node);
    }
    if (d == nullptr) {
        throw Error(ErrorCode::precondition_failed, "node has no such draft", Json{{"node", node}});
    }
    return *d;
}

}  // namespace

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::bad_request:
        case ErrorCode::empty_goal:
        case ErrorCode::invalid_entry:
        case ErrorCode::empty_subtask_list:
        case ErrorCode::strategy_input_mismatch:
        case ErrorCode::bad_config:
        case ErrorCode::malformed_suite:
            return 400;
        case ErrorCode::not_found:
        case ErrorCode::unknown_node:
        case ErrorCode::unknown_key:
        case ErrorCode::unknown_question:
            return 404;
        case ErrorCode::conflict:
        case ErrorCode::already_decomposed:
        case ErrorCode::tree_limit:
        case ErrorCode::feature_disabled:
        case ErrorCode::precondition_failed:
            return 409;
        case ErrorCode::unparseable_subtasks:
        case ErrorCode::unparseable_verdict:
        case ErrorCode::no_valid_keys:
        case ErrorCode::no_entities_found:
            return 422;
        case ErrorCode::provider_http:
        case ErrorCode::provider_timeout:
        case ErrorCode::script_exhausted:
        case ErrorCode::script_mismatch:
        case ErrorCode::provider_unavailable:
            return 503;
        case ErrorCode::missing_binding:
        case ErrorCode::unknown_binding:
        case ErrorCode::unreplaced_placeholder:
        case ErrorCode::malformed_template:
        case ErrorCode::io_error:
        case ErrorCode::schema_mismatch:
        case ErrorCode::corrupt_session:
        case ErrorCode::addr_in_use:
            return 500;
    }
    return 500;
}

Json error_body(const Error& e) {
    if (e.is_provider_failure() && e.code() != ErrorCode::provider_unavailable) {
        Json detail = e.detail().is_object() ? e.detail() : Json::object();
        detail["engine_code"] = to_string(e.code());
        return Json{{"code", to_string(ErrorCode::provider_unavailable)}, {"message", e.what()}, {"detail", detail}};
    }
    return Json{{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}};
}

struct Service::Slot {
    std::mutex mutex;
    std::optional<Session> session;
    std::unique_ptr<SessionLock> lock;
    std::filesystem::path file;
};

Service::Service(Provider& provider, ServiceConfig config, const PromptLibrary& prompts, Clock clock)
    : provider_(provider),
      config_(std::move(config)),
      engine_(provider, prompts, EngineConfig{config_.strategy, {}, {}}, clock) {
    std::error_code ec;
    std::filesystem::create_directories(config_.sessions_dir, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create sessions directory " + config_.sessions_dir.string());
}

Service::~Service() = default;

std::string Service::next_id() {
    if (config_.deterministic_ids) {
        std::string id;
        do {
            id = "session-" + std::to_string(++counter_);
        } while (slots_.count(id) != 0 || std::filesystem::exists(config_.sessions_dir / (id + ".json")));
        return id;
    }
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    do {
        id.clear();
        for (int i = 0; i < 16; ++i) id += kHex[rng() % 16];
    } while (slots_.count(id) != 0);
    return id;
}

std::shared_ptr<Service::Slot> Service::slot_for(const std::string& id) {
    if (!Session::valid_id(id)) throw Error(ErrorCode::not_found, "unknown session '" + id + "'");
    std::lock_guard guard(mutex_);
    if (auto it = slots_.find(id); it != slots_.end()) return it->second;
    const auto file = config_.sessions_dir / (id + ".json");
    if (!std::filesystem::exists(file)) {
        throw Error(ErrorCode::not_found, "unknown session '" + id + "'", Json{{"session_id", id}});
    }
    auto slot = std::make_shared<Slot>();
    slot->file = file;
    slot->lock = std::make_unique<SessionLock>(file);
    slot->session = Session::load(file);
    slots_.emplace(id, slot);
    return slot;
}

void Service::persist(Slot& slot, Session next) {
    next.save(slot.file);
    slot.session = std::move(next);
}

std::optional<Session> Service::snapshot(const std::string& id) {
    try {
        auto slot = slot_for(id);
        std::lock_guard guard(slot->mutex);
        return slot->session;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::not_found) return std::nullopt;
        throw;
    }
}

ApiResponse Service::handle(const ApiRequest& req) {
    try {
        const auto parts = split_path(req.path);
        if (parts.empty() || parts[0] != "sessions") route_not_found(req);
        if (parts.size() == 1) {
            if (req.method != "POST") route_not_found(req);
            return create_session(parse_body(req.body));
        }
        return route_session(parts[1], std::vector<std::string>(parts.begin() + 2, parts.end()), req);
    } catch (const Error& e) {
        return {http_status(e.code()), error_body(e)};
    } catch (const std::exception& e) {
        return {500, Json{{"code", "internal"}, {"message", e.what()}, {"detail", nullptr}}};
    }
}

ApiResponse Service::create_session(const Json& body) {
    const std::string goal = opt_string(body, "goal").value_or("");
    const auto mode_text = opt_string(body, "mode");
    const AblationMode mode =
        mode_text ? parse_ablation_mode(*mode_text, ErrorCode::bad_request) : config_.default_mode;
    if (is_blank(goal)) throw Error(ErrorCode::bad_request, "goal is empty");

    auto slot = std::make_shared<Slot>();
    std::unique_lock slot_guard(slot->mutex);
    std::string id;
    {
        std::lock_guard guard(mutex_);
        id = next_id();
        slot->file = config_.sessions_dir / (id + ".json");
        slot->lock = std::make_unique<SessionLock>(slot->file);
        slots_.emplace(id, slot);
    }
    std::vector<ElicitationQuestion> questions;
    try {
        Session s = engine_.start_session(id, goal, mode);
        if (elicitation_enabled(mode)) questions = engine_.elicit_global_context(s);
        persist(*slot, std::move(s));
    } catch (...) {
        std::lock_guard guard(mutex_);
        slots_.erase(id);
        slot->lock.reset();
        std::error_code ec;
        std::filesystem::remove(slot->file.string() + ".lock", ec);
        throw;
    }
    return {201, Json{{"session_id", id}, {"questions", questions_json(questions)}}};
}

ApiResponse Service::route_session(const std::string& id, const std::vector<std::string>& rest,
                                   const ApiRequest& req) {
    auto slot = slot_for(id);
    std::lock_guard guard(slot->mutex);
    if (!slot->session) throw Error(ErrorCode::not_found, "unknown session '" + id + "'");
    const Session& current = *slot->session;
    const std::string& m = req.method;

    if (rest.size() == 1 && rest[0] == "tree" && m == "GET") return {200, current.tree().to_json()};

    if (rest.size() == 1 && rest[0] == "context" && m == "GET") {
        Json entries = Json::array();
        const auto it = req.query.find("scope");
        for (Scope sc : {Scope::global, Scope::local}) {
            if (it != req.query.end() && !it->second.empty() &&
                parse_scope(it->second, ErrorCode::bad_request) != sc) {
                continue;
            }
            for (auto& e : key_infos_json(current.context().list_keys(sc), sc)) entries.push_back(std::move(e));
        }
        return {200, Json{{"entries", std::move(entries)}}};
    }

    if (m != "POST") route_not_found(req);
    const Json body = parse_body(req.body);
    Session work = current;

    if (rest.size() == 1 && rest[0] == "answers") {
        engine_.commit_elicited(work, parse_answers(body));
        Json keys = Json::array();
        for (const auto& info : work.context().list_keys(Scope::global)) {
            if (info.provenance != Provenance::goal_statement) keys.push_back(info.key);
        }
        persist(*slot, std::move(work));
        return {200, Json{{"global_context_keys", std::move(keys)}}};
    }

    if (rest.size() == 1 && rest[0] == "context") {
        const std::string key = opt_string(body, "key").value_or("");
        engine_.add_context(work, key, opt_string(body, "value").value_or(""));
        persist(*slot, std::move(work));
        return {201, Json{{"key", key}}};
    }

    if (rest.size() != 3 || rest[0] != "nodes") route_not_found(req);
    const NodeId node = rest[1];
    const std::string& action = rest[2];

    if (action == "detect") {
        std::optional<DetectionStrategy> strategy;
        if (auto v = opt_string(body, "strategy")) {
            strategy = DetectionStrategy::of(parse_detection_variant(*v, ErrorCode::bad_request));
        }
        const Verdict v = engine_.detect_actionability(work, node, strategy);
        ForkVerdict fork;
        if (v.needs_decomposition) fork = engine_.detect_fork(work, node);
        persist(*slot, std::move(work));
        return {200, Json{{"needs_decomposition", v.needs_decomposition},
                          {"should_fork", fork.should_fork},
                          {"reasoning", v.reasoning},
                          {"fork_reasoning", fork.reasoning}}};
    }

    if (action == "decompose") {
        const auto keys = opt_string_list(body, "accepted_keys");
        const SessionEvent* fd = work.last_event_for(EventKind::fork_decision, node);
        const bool fork = fd != nullptr && fd->payload.at("should_fork").get<bool>() && keys.has_value();
        const auto ids = fork ? engine_.fork_task(work, node, *keys) : engine_.generate_subtasks(work, node);
        const Json tree = work.tree().to_json();
        Json children = Json::array();
        for (const auto& cid : ids) children.push_back(tree.at("nodes").at(cid));
        persist(*slot, std::move(work));
        return {200, Json{{"kind", fork ? "fork" : "standard"}, {"children", std::move(children)}}};
    }

    if (action == "context-selection") {
        const SelectionPurpose purpose =
            parse_selection_purpose(opt_string(body, "purpose").value_or("drafting"), ErrorCode::bad_request);
        const auto candidates = engine_.select_context(work, node, purpose);
        Json arr = Json::array();
        for (const auto& c : candidates) arr.push_back({{"key", c.key}, {"reason", c.reason}, {"accepted", c.accepted}});
        persist(*slot, std::move(work));
        return {200, Json{{"candidates", std::move(arr)}}};
    }

    if (action == "draft") {
        const std::string act = req_string(body, "action");
        const auto keys = opt_string_list(body, "accepted_keys").value_or(std::vector<std::string>{});
        Json out;
        if (act == "generate" || act == "regenerate") {
            out = {{"draft", engine_.generate_draft(work, node, keys).to_json()}};
        } else if (act == "elicit_and_regenerate") {
            if (!elicitation_enabled(work.mode())) {
                throw Error(ErrorCode::feature_disabled,
                            "elicit_and_regenerate is disabled in mode " + std::string(to_string(work.mode())),
                            Json{{"mode", to_string(work.mode())}});
            }
            const DraftCandidate base = draft_for(work, node, body);
            if (body.contains("answers")) {
                const auto use = body.contains("accepted_keys") ? keys : base.context_keys_used;
                out = {{"draft", engine_.regenerate_with_context(work, node, parse_answers(body), use).to_json()}};
            } else {
                out = {{"questions", questions_json(engine_.elicit_draft_context(work, node, base))}};
            }
        } else if (act == "iterate") {
            const DraftCandidate base = draft_for(work, node, body);
            out = {{"draft", engine_.iterate_draft(work, node, base, opt_string(body, "instruction").value_or(""))
                                 .to_json()}};
        } else if (act == "save") {
            const DraftCandidate base = draft_for(work, node, body);
            out = {{"saved_key", engine_.save_draft(work, node, base)}};
        } else {
            throw Error(ErrorCode::bad_request, "unknown draft action '" + act + "'");
        }
        persist(*slot, std::move(work));
        return {200, std::move(out)};
    }

    route_not_found(req);
}

void Service::mount(httplib::Server& server) {
    auto forward = [this](const httplib::Request& hreq, httplib::Response& hres) {
        ApiRequest req{hreq.method, hreq.path, {}, hreq.body};
        for (const auto& [k, v] : hreq.params) req.query[k] = v;
        const ApiResponse res = handle(req);
        hres.status = res.status;
        hres.set_content(res.body.dump(), "application/json");
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Put(".*", forward);
    server.Delete(".*", forward);
    server.set_read_timeout(config_.timeout_seconds, 0);
    server.set_write_timeout(config_.timeout_seconds, 0);
}

}  // namespace plancurate

#include "plancurate/session.hpp"

#include "plancurate/util.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace plancurate {

namespace {

constexpr EnumNames<EventKind, 12> kEventNames{{{
    {EventKind::goal_set, "goal_set"},
    {EventKind::questions_generated, "questions_generated"},
    {EventKind::answer_committed, "answer_committed"},
    {EventKind::context_added, "context_added"},
    {EventKind::subtasks_attached, "subtasks_attached"},
    {EventKind::detection, "detection"},
    {EventKind::fork_decision, "fork_decision"},
    {EventKind::context_selected, "context_selected"},
    {EventKind::draft_generated, "draft_generated"},
    {EventKind::draft_saved, "draft_saved"},
    {EventKind::provider_call, "provider_call"},
    {EventKind::warning, "warning"},
}}};

constexpr std::array<std::string_view, 9> kTopLevelKeys{
    "id", "goal", "mode", "tree", "context", "drafts", "pending_questions", "events", "schema_version"};

[[noreturn]] void corrupt(const std::string& what, Json detail = nullptr) {
    throw Error(ErrorCode::corrupt_session, what, std::move(detail));
}

}  // namespace

std::string_view to_string(EventKind k) { return kEventNames.name(k); }

EventKind parse_event_kind(std::string_view text) {
    return kEventNames.parse(text, ErrorCode::corrupt_session, "event kind");
}

Json SessionEvent::to_json() const {
    return Json{{"seq", seq}, {"kind", to_string(kind)}, {"payload", payload}, {"at", at}};
}

SessionEvent SessionEvent::from_json(const Json& j) {
    SessionEvent e;
    try {
        e.seq = j.at("seq").get<std::uint64_t>();
        e.kind = parse_event_kind(j.at("kind").get<std::string>());
        e.payload = j.at("payload");
        e.at = j.at("at").get<std::string>();
    } catch (const Json::exception& ex) {
        corrupt(std::string("malformed event: ") + ex.what());
    }
    return e;
}

bool Session::valid_id(std::string_view id) {
    return !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

Session Session::start(std::string id, std::string goal, AblationMode mode, std::string at) {
    if (!valid_id(id)) throw Error(ErrorCode::bad_request, "invalid session id '" + id + "'");
    if (is_blank(goal)) throw Error(ErrorCode::empty_goal, "goal is empty");
    Session s;
    s.record(EventKind::goal_set,
             Json{{"session_id", std::move(id)}, {"goal", std::move(goal)}, {"mode", to_string(mode)}},
             std::move(at));
    return s;
}

const SessionEvent& Session::record(EventKind kind, Json payload, std::string at) {
    SessionEvent e;
    e.seq = events_.size() + 1;
    e.kind = kind;
    e.payload = std::move(payload);
    e.at = std::move(at);
    apply(e);
    events_.push_back(std::move(e));
    return events_.back();
}

void Session::apply(const SessionEvent& e) {
    const Json& p = e.payload;
    try {
        if (events_.empty() != (e.kind == EventKind::goal_set)) {
            corrupt("goal_set must be the first event and occur only once");
        }
        switch (e.kind) {
            case EventKind::goal_set: {
                std::string id = p.at("session_id").get<std::string>();
                if (!valid_id(id)) corrupt("invalid session id");
                std::string goal = p.at("goal").get<std::string>();
                const AblationMode mode = parse_ablation_mode(p.at("mode").get<std::string>(), ErrorCode::corrupt_session);
                TaskTree tree = TaskTree::create(goal, "", e.at);
                ContextStore store;
                store.put(ContextEntry{"Goal", goal, Scope::global, Provenance::goal_statement, std::nullopt, e.at});
                id_ = std::move(id);
                goal_ = std::move(goal);
                mode_ = mode;
                tree_ = std::move(tree);
                context_ = std::move(store);
                break;
            }
            case EventKind::questions_generated: {
                std::vector<ElicitationQuestion> added;
                for (const auto& q : p.at("questions")) {
                    ElicitationQuestion eq;
                    eq.id = q.at("id").get<std::string>();
                    eq.question = q.at("question").get<std::string>();
                    eq.expects_file = q.at("expects_file").get<bool>();
                    if (find_question(eq.id) != nullptr ||
                        std::any_of(added.begin(), added.end(), [&](const auto& a) { return a.id == eq.id; })) {
                        corrupt("duplicate question id '" + eq.id + "'");
                    }
                    added.push_back(std::move(eq));
                }
                if (p.contains("node") && !p.at("node").is_null()) {
                    (void)tree_.node(p.at("node").get<std::string>());
                }
                pending_questions_.insert(pending_questions_.end(), added.begin(), added.end());
                break;
            }
            case EventKind::answer_committed: {
                const std::string qid = p.at("question_id").get<std::string>();
                auto it = std::find_if(pending_questions_.begin(), pending_questions_.end(),
                                       [&](const auto& q) { return q.id == qid; });
                if (it == pending_questions_.end()) {
                    throw Error(ErrorCode::unknown_question, "unknown question '" + qid + "'", Json{{"question_id", qid}});
                }
                std::string answer = p.at("answer").is_null() ? std::string(kSkippedAnswer)
                                                              : p.at("answer").get<std::string>();
                if (!p.at("entry").is_null()) context_.put(ContextEntry::from_json(p.at("entry")));
                it->answer = std::move(answer);
                it->answered = true;
                break;
            }
            case EventKind::context_added: {
                context_.put(ContextEntry::from_json(p.at("entry")));
                break;
            }
            case EventKind::subtasks_attached: {
                const NodeId parent = p.at("parent").get<std::string>();
                const Decomposition kind = parse_decomposition(p.at("kind").get<std::string>());
                std::vector<NodeId> ids;
                std::vector<SubtaskSpec> specs;
                for (const auto& s : p.at("subtasks")) {
                    ids.push_back(s.at("id").get<std::string>());
                    specs.push_back({s.at("title").get<std::string>(), s.at("description").get<std::string>(),
                                     s.at("estimated_duration").get<std::string>()});
                }
                tree_.attach_subtasks_with_ids(parent, ids, specs, kind);
                break;
            }
            case EventKind::detection:
            case EventKind::fork_decision:
            case EventKind::context_selected: {
                tree_.mark_exploring(p.at("node").get<std::string>());
                break;
            }
            case EventKind::draft_generated: {
                DraftCandidate d = DraftCandidate::from_json(p.at("candidate"));
                (void)tree_.node(d.node);
                auto& list = drafts_[d.node];
                if (d.revision != static_cast<int>(list.size()) + 1) {
                    if (list.empty()) drafts_.erase(d.node);
                    corrupt("draft revision out of sequence for node '" + d.node + "'");
                }
                for (const auto& k : d.context_keys_used) {
                    if (!context_.contains(Scope::local, k)) {
                        if (list.empty()) drafts_.erase(d.node);
                        corrupt("draft uses unknown local key '" + k + "'");
                    }
                }
                tree_.mark_exploring(d.node);
                list.push_back(std::move(d));
                break;
            }
            case EventKind::draft_saved: {
                const NodeId node = p.at("node").get<std::string>();
                const int revision = p.at("revision").get<int>();
                ContextEntry entry = ContextEntry::from_json(p.at("entry"));
                (void)tree_.node(node);
                if (find_draft(node, revision) == nullptr) corrupt("saved draft revision does not exist");
                if (entry.provenance != Provenance::saved_draft || entry.source_node != node) {
                    corrupt("saved draft entry does not reference its node");
                }
                const std::string key = entry.key;
                context_.put(std::move(entry));
                tree_.set_draft_ref(node, key);
                break;
            }
            case EventKind::provider_call:
            case EventKind::warning:
                break;
        }
    } catch (const Json::exception& ex) {
        corrupt("malformed " + std::string(to_string(e.kind)) + " payload: " + ex.what());
    }
}

Session Session::replay(std::span<const SessionEvent> events) {
    if (events.empty()) corrupt("cannot replay an empty event log");
    Session s;
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].seq != i + 1) {
            corrupt("event sequence gap at position " + std::to_string(i + 1),
                    Json{{"expected", i + 1}, {"found", events[i].seq}});
        }
        try {
            s.apply(events[i]);
        } catch (const Error& err) {
            if (err.code() == ErrorCode::corrupt_session) throw;
            corrupt("event " + std::to_string(events[i].seq) + " cannot be applied: " + err.what());
        }
        s.events_.push_back(events[i]);
    }
    return s;
}

const ElicitationQuestion* Session::find_question(std::string_view id) const {
    auto it = std::find_if(pending_questions_.begin(), pending_questions_.end(),
                           [&](const auto& q) { return q.id == id; });
    return it == pending_questions_.end() ? nullptr : &*it;
}

const DraftCandidate* Session::find_draft(const NodeId& node, int revision) const {
    auto it = drafts_.find(node);
    if (it == drafts_.end() || revision < 1 || revision > static_cast<int>(it->second.size())) return nullptr;
    return &it->second[static_cast<std::size_t>(revision - 1)];
}

const DraftCandidate* Session::latest_draft(const NodeId& node) const {
    auto it = drafts_.find(node);
    if (it == drafts_.end() || it->second.empty()) return nullptr;
    return &it->second.back();
}

const SessionEvent* Session::last_event_for(EventKind kind, const NodeId& node) const {
    for (auto it = events_.rbegin(); it != events_.rend(); ++it) {
        if (it->kind != kind) continue;
        const auto n = it->payload.find("node");
        if (n != it->payload.end() && n->is_string() && n->get<std::string>() == node) return &*it;
    }
    return nullptr;
}

void Session::check_invariants() const {
    tree_.validate();
    for (const auto& n : tree_.nodes()) {
        if (n.draft_ref && !context_.contains(Scope::local, *n.draft_ref)) {
            corrupt("draft_ref of '" + n.id + "' does not resolve to a local context key");
        }
    }
    for (const auto& e : context_.entries()) {
        if (e.provenance == Provenance::saved_draft && (!e.source_node || !tree_.contains(*e.source_node))) {
            corrupt("saved draft '" + e.key + "' references a missing node");
        }
    }
    for (const auto& [node, list] : drafts_) {
        if (!tree_.contains(node)) corrupt("drafts reference missing node '" + node + "'");
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (list[i].node != node || list[i].revision != static_cast<int>(i) + 1) {
                corrupt("draft history of '" + node + "' is out of sequence");
            }
        }
    }
    if (events_.empty() || events_.front().kind != EventKind::goal_set) corrupt("event log must start with goal_set");
    for (std::size_t i = 0; i < events_.size(); ++i) {
        if (events_[i].seq != i + 1) corrupt("event sequence gap at position " + std::to_string(i + 1));
    }
}

Json Session::to_json() const {
    Json drafts = Json::object();
    for (const auto& [node, list] : drafts_) {
        Json arr = Json::array();
        for (const auto& d : list) arr.push_back(d.to_json());
        drafts[node] = std::move(arr);
    }
    Json questions = Json::array();
    for (const auto& q : pending_questions_) questions.push_back(q.to_json());
    Json events = Json::array();
    for (const auto& e : events_) events.push_back(e.to_json());
    return Json{{"id", id_},
                {"goal", goal_},
                {"mode", to_string(mode_)},
                {"tree", tree_.to_json()},
                {"context", context_.to_json()},
                {"drafts", std::move(drafts)},
                {"pending_questions", std::move(questions)},
                {"events", std::move(events)},
                {"schema_version", kSchemaVersion}};
}

Session Session::from_json(const Json& j) {
    if (!j.is_object()) corrupt("session document is not an object");
    if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer()) {
        corrupt("missing schema_version");
    }
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
        throw Error(ErrorCode::schema_mismatch, "unsupported schema_version " + std::to_string(version),
                    Json{{"found", version}, {"supported", kSchemaVersion}});
    }
    std::set<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.insert(k);
    if (keys != std::set<std::string>(kTopLevelKeys.begin(), kTopLevelKeys.end())) {
        corrupt("unexpected top-level keys in session document");
    }

    Session s;
    try {
        s.id_ = j.at("id").get<std::string>();
        s.goal_ = j.at("goal").get<std::string>();
        s.mode_ = parse_ablation_mode(j.at("mode").get<std::string>(), ErrorCode::corrupt_session);
        s.tree_ = TaskTree::from_json(j.at("tree"));
        s.context_ = ContextStore::from_json(j.at("context"));
        for (const auto& [node, list] : j.at("drafts").items()) {
            auto& out = s.drafts_[node];
            for (const auto& d : list) out.push_back(DraftCandidate::from_json(d));
        }
        for (const auto& q : j.at("pending_questions")) {
            s.pending_questions_.push_back(ElicitationQuestion::from_json(q));
        }
        for (const auto& e : j.at("events")) s.events_.push_back(SessionEvent::from_json(e));
    } catch (const Json::exception& ex) {
        corrupt(std::string("malformed session document: ") + ex.what());
    }
    s.check_invariants();
    return s;
}

void Session::save(const std::filesystem::path& path) const {
    const std::string text = to_json().dump(2) + "\n";
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string(), Json{{"path", path.string()}});
        out << text;
        if (!out.flush()) throw Error(ErrorCode::io_error, "write failed for " + path.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::io_error, "cannot write " + path.string(), Json{{"path", path.string()}});
    }
}

Session Session::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string(), Json{{"path", path.string()}});
    std::stringstream buf;
    buf << in.rdbuf();
    Json j;
    try {
        j = Json::parse(buf.str());
    } catch (const Json::exception& e) {
        corrupt("session file is not valid JSON: " + std::string(e.what()), Json{{"path", path.string()}});
    }
    Session s = from_json(j);
    const Session rebuilt = replay(s.events_);
    if (!equivalent(s, rebuilt)) corrupt("materialized state disagrees with the event log");
    return s;
}

bool equivalent(const Session& a, const Session& b) { return a.to_json() == b.to_json(); }

SessionLock::SessionLock(const std::filesystem::path& session_file) {
    const std::string lock_path = session_file.string() + ".lock";
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::io_error, "cannot open lock file " + lock_path);
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        throw Error(ErrorCode::conflict, "session is open for writing elsewhere", Json{{"lock", lock_path}});
    }
}

SessionLock::~SessionLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

}  // namespace plancurate

#pragma once

#include "plancurate/context_store.hpp"
#include "plancurate/curation_types.hpp"
#include "plancurate/task_graph.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace plancurate {

enum class EventKind {
    goal_set,
    questions_generated,
    answer_committed,
    context_added,
    subtasks_attached,
    detection,
    fork_decision,
    context_selected,
    draft_generated,
    draft_saved,
    provider_call,
    warning,
};

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view text);

struct SessionEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::warning;
    Json payload;
    std::string at;

    [[nodiscard]] Json to_json() const;
    static SessionEvent from_json(const Json& j);

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

/// Planning state for one goal. The event log is authoritative: every
/// mutation goes through record(), which applies the event and appends it,
/// so replay(events()) rebuilds an identical session.
class Session {
public:
    static constexpr int kSchemaVersion = 1;

    /// Records the goal_set event: root node plus the "Goal" global entry.
    static Session start(std::string id, std::string goal, AblationMode mode, std::string at);

    /// Applies then appends. If the payload is rejected the session is left
    /// unchanged.
    const SessionEvent& record(EventKind kind, Json payload, std::string at);

    static Session replay(std::span<const SessionEvent> events);

    void save(const std::filesystem::path& path) const;
    static Session load(const std::filesystem::path& path);

    [[nodiscard]] Json to_json() const;
    static Session from_json(const Json& j);

    /// Cross-module invariants: tree structure, draft_ref resolution, saved
    /// draft sources, gapless event numbering.
    void check_invariants() const;

    [[nodiscard]] const std::string& id() const { return id_; }
    [[nodiscard]] const std::string& goal() const { return goal_; }
    [[nodiscard]] AblationMode mode() const { return mode_; }
    [[nodiscard]] const TaskTree& tree() const { return tree_; }
    [[nodiscard]] const ContextStore& context() const { return context_; }
    [[nodiscard]] const std::map<NodeId, std::vector<DraftCandidate>>& drafts() const { return drafts_; }
    [[nodiscard]] const std::vector<ElicitationQuestion>& pending_questions() const {
        return pending_questions_;
    }
    [[nodiscard]] const std::vector<SessionEvent>& events() const { return events_; }

    [[nodiscard]] const ElicitationQuestion* find_question(std::string_view id) const;
    [[nodiscard]] const DraftCandidate* find_draft(const NodeId& node, int revision) const;
    [[nodiscard]] const DraftCandidate* latest_draft(const NodeId& node) const;

    /// Latest event of `kind` whose payload "node" equals `node`.
    [[nodiscard]] const SessionEvent* last_event_for(EventKind kind, const NodeId& node) const;

    static bool valid_id(std::string_view id);

private:
    Session() = default;
    void apply(const SessionEvent& event);

    std::string id_;
    std::string goal_;
    AblationMode mode_ = AblationMode::full_curation;
    TaskTree tree_;
    ContextStore context_;
    std::map<NodeId, std::vector<DraftCandidate>> drafts_;
    std::vector<ElicitationQuestion> pending_questions_;
    std::vector<SessionEvent> events_;
};

/// Equivalence used by the replay and round-trip checks: identical
/// serialized form.
bool equivalent(const Session& a, const Session& b);

/// Advisory write lock (<session file>.lock, flock-based). Released on
/// destruction or process exit.
class SessionLock {
public:
    explicit SessionLock(const std::filesystem::path& session_file);
    ~SessionLock();
    SessionLock(const SessionLock&) = delete;
    SessionLock& operator=(const SessionLock&) = delete;
    SessionLock(SessionLock&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    SessionLock& operator=(SessionLock&&) = delete;

private:
    int fd_ = -1;
};

}  // namespace plancurate

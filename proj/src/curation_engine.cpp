#include "plancurate/curation_engine.hpp"

#include <algorithm>
#include <filesystem>
#include <type_traits>

namespace plancurate {

namespace {

Json questions_json(const std::vector<ElicitationQuestion>& qs) {
    Json arr = Json::array();
    for (const auto& q : qs) {
        arr.push_back({{"id", q.id}, {"question", q.question}, {"expects_file", q.expects_file}});
    }
    return arr;
}

Json subtasks_json(std::span<const NodeId> ids, std::span<const SubtaskSpec> specs) {
    Json arr = Json::array();
    for (std::size_t i = 0; i < ids.size(); ++i) {
        arr.push_back({{"id", ids[i]},
                       {"title", specs[i].title},
                       {"description", specs[i].description},
                       {"estimated_duration", specs[i].estimated_duration}});
    }
    return arr;
}

std::vector<NodeId> next_node_ids(const TaskTree& tree, std::size_t count) {
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < count; ++i) ids.push_back("n" + std::to_string(tree.size() + i + 1));
    return ids;
}

void require_undecomposed(const TaskNode& n) {
    if (!n.children.empty()) {
        throw Error(ErrorCode::already_decomposed, "node '" + n.id + "' is already decomposed",
                    Json{{"node", n.id}});
    }
    if (n.level >= TaskTree::kMaxLevel) {
        throw Error(ErrorCode::tree_limit, "depth limit reached", Json{{"limit", TaskTree::kMaxLevel}, {"node", n.id}});
    }
}

[[noreturn]] void disabled(AblationMode mode, std::string_view op) {
    throw Error(ErrorCode::feature_disabled,
                std::string(op) + " is disabled in mode " + std::string(to_string(mode)),
                Json{{"mode", to_string(mode)}, {"operation", op}});
}

std::string elicited_key(const ElicitationQuestion& q, const std::optional<std::string>& file_name) {
    if (file_name) {
        std::string stem = std::filesystem::path(*file_name).stem().string();
        if (!is_blank(stem)) return stem;
    }
    return utf8_truncate(trim(q.question), CurationEngine::kElicitedKeyChars);
}

}  // namespace

std::string render_context_history(const ContextStore& store) {
    const auto keys = store.keys(Scope::local);
    if (keys.empty()) return std::string(ContextStore::kEmptyRendering);
    std::string out;
    for (const auto& k : keys) {
        if (!out.empty()) out += '\n';
        out += "- " + k;
    }
    return out;
}

CurationEngine::CurationEngine(Provider& provider, const PromptLibrary& prompts, EngineConfig config,
                               Clock clock)
    : provider_(provider), prompts_(prompts), config_(std::move(config)), clock_(clock) {}

template <typename F>
auto CurationEngine::transact(Session& session, F&& body) {
    Session work = session;
    if constexpr (std::is_void_v<std::invoke_result_t<F, Session&>>) {
        body(work);
        session = std::move(work);
    } else {
        auto result = body(work);
        session = std::move(work);
        return result;
    }
}

Session CurationEngine::start_session(std::string id, std::string goal, AblationMode mode) const {
    return Session::start(std::move(id), std::move(goal), mode, clock_.now_iso8601());
}

RequestParams CurationEngine::params_for(TemplateId id) const {
    auto it = config_.overrides.find(id);
    return it == config_.overrides.end() ? config_.params : it->second;
}

void CurationEngine::warn(Session& s, std::string message, Json detail) {
    s.record(EventKind::warning, Json{{"message", std::move(message)}, {"detail", std::move(detail)}},
             clock_.now_iso8601());
}

Completion CurationEngine::call(Session& s, TemplateId id, std::string tag, std::vector<ChatMessage> messages) {
    CompletionRequest request{std::move(messages), params_for(id), std::move(tag)};
    Json payload{{"tag", request.tag}, {"model", provider_.model()}};
    try {
        Completion c = provider_.complete(request);
        payload["latency_ms"] = c.latency_ms;
        payload["request"] = request.to_json();
        payload["response"] = c.text;
        payload["usage"] = {{"prompt_chars", c.usage.prompt_chars}, {"response_chars", c.usage.response_chars}};
        s.record(EventKind::provider_call, std::move(payload), clock_.now_iso8601());
        return c;
    } catch (const Error& e) {
        if (!e.is_provider_failure()) throw;
        payload["request"] = request.to_json();
        payload["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
        s.record(EventKind::provider_call, std::move(payload), clock_.now_iso8601());
        throw;
    }
}

template <typename Parse>
auto CurationEngine::call_with_reask(Session& s, TemplateId id, std::string tag,
                                     std::vector<ChatMessage> messages, ErrorCode retry_on,
                                     std::string_view reask, Parse&& parse) {
    const Completion first = call(s, id, tag, messages);
    try {
        return parse(first.text);
    } catch (const Error& e) {
        if (e.code() != retry_on) throw;
    }
    messages.push_back({Role::assistant, first.text});
    messages.push_back({Role::user, std::string(reask)});
    const Completion second = call(s, id, tag, std::move(messages));
    return parse(second.text);
}

void CurationEngine::put_context(Session& s, ContextEntry entry, EventKind kind, Json extra) {
    entry.check();
    if (const ContextEntry* existing = s.context().find(entry.scope, entry.key)) {
        if (existing->provenance != entry.provenance || existing->source_node != entry.source_node) {
            warn(s, "context key collision; overwriting existing entry",
                 Json{{"key", entry.key},
                      {"previous_provenance", to_string(existing->provenance)},
                      {"new_provenance", to_string(entry.provenance)}});
        }
    }
    extra["entry"] = entry.to_json();
    s.record(kind, std::move(extra), clock_.now_iso8601());
}

// ---------------------------------------------------------------------------
// Elicitation

std::vector<ElicitationQuestion> CurationEngine::elicit_global_context(Session& session) {
    return transact(session, [&](Session& s) {
        if (!elicitation_enabled(s.mode())) disabled(s.mode(), "elicit_global_context");
        const auto prompt = prompts_.render(TemplateId::elicit_global, {{"main_purpose", s.goal()}});
        const Completion c = call(s, TemplateId::elicit_global, "elicit_global",
                                  {{Role::system, prompt.system}, {Role::user, prompt.user}});
        std::vector<ElicitationQuestion> questions;
        for (auto& parsed : parse_question_list(c.text)) {
            ElicitationQuestion q;
            q.id = "q" + std::to_string(s.pending_questions().size() + questions.size() + 1);
            q.question = std::move(parsed.question);
            q.expects_file = parsed.expects_file;
            questions.push_back(std::move(q));
        }
        s.record(EventKind::questions_generated,
                 Json{{"purpose", "global"}, {"node", nullptr}, {"questions", questions_json(questions)}},
                 clock_.now_iso8601());
        return questions;
    });
}

void CurationEngine::commit_elicited(Session& session, std::span<const ElicitedAnswer> answers) {
    transact(session, [&](Session& s) {
        for (const auto& a : answers) {
            if (s.find_question(a.question_id) == nullptr) {
                throw Error(ErrorCode::unknown_question, "unknown question '" + a.question_id + "'",
                            Json{{"question_id", a.question_id}});
            }
        }
        for (const auto& a : answers) {
            const ElicitationQuestion q = *s.find_question(a.question_id);
            const bool skipped = !a.text || is_blank(*a.text);
            Json payload{{"question_id", q.id}, {"answer", skipped ? Json(nullptr) : Json(*a.text)}};
            if (skipped) {
                payload["entry"] = nullptr;
                s.record(EventKind::answer_committed, std::move(payload), clock_.now_iso8601());
                continue;
            }
            ContextEntry entry{elicited_key(q, a.file_name), *a.text, Scope::global,
                               a.file_name ? Provenance::uploaded_document : Provenance::elicited_answer,
                               std::nullopt, clock_.now_iso8601()};
            put_context(s, std::move(entry), EventKind::answer_committed, std::move(payload));
        }
    });
}

std::vector<ElicitationQuestion> CurationEngine::elicit_draft_context(Session& session, const NodeId& node,
                                                                      const DraftCandidate& candidate) {
    return transact(session, [&](Session& s) {
        if (!elicitation_enabled(s.mode())) disabled(s.mode(), "elicit_draft_context");
        const TaskNode& n = s.tree().node(node);
        if (candidate.node != node) throw Error(ErrorCode::precondition_failed, "draft belongs to another node");
        const auto prompt = prompts_.render(
            TemplateId::elicit_draft_iteration,
            {{"main_purpose", s.goal()},
             {"user_context", draft_user_context(s, candidate.context_keys_used)},
             {"current_task", n.title},
             {"task_description", n.description},
             {"draft", candidate.content}});
        const Completion c = call(s, TemplateId::elicit_draft_iteration, "elicit_draft_iteration",
                                  {{Role::system, prompt.system}, {Role::user, prompt.user}});
        std::vector<ElicitationQuestion> questions;
        for (auto& parsed : parse_question_list(c.text)) {
            ElicitationQuestion q;
            q.id = "q" + std::to_string(s.pending_questions().size() + questions.size() + 1);
            q.question = std::move(parsed.question);
            q.expects_file = parsed.expects_file;
            questions.push_back(std::move(q));
        }
        s.record(EventKind::questions_generated,
                 Json{{"purpose", "draft"}, {"node", node}, {"questions", questions_json(questions)}},
                 clock_.now_iso8601());
        return questions;
    });
}

DraftCandidate CurationEngine::regenerate_with_context(Session& session, const NodeId& node,
                                                       std::span<const ElicitedAnswer> answers,
                                                       std::span<const std::string> accepted_keys) {
    return transact(session, [&](Session& s) {
        if (!elicitation_enabled(s.mode())) disabled(s.mode(), "elicit_draft_context");
        const TaskNode n = s.tree().node(node);
        for (const auto& a : answers) {
            if (s.find_question(a.question_id) == nullptr) {
                throw Error(ErrorCode::unknown_question, "unknown question '" + a.question_id + "'",
                            Json{{"question_id", a.question_id}});
            }
        }
        std::vector<std::string> keys = resolve_draft_keys(s, accepted_keys);
        bool added = false;
        for (const auto& a : answers) {
            const ElicitationQuestion q = *s.find_question(a.question_id);
            const bool skipped = !a.text || is_blank(*a.text);
            Json payload{{"question_id", q.id}, {"answer", skipped ? Json(nullptr) : Json(*a.text)}};
            if (skipped) {
                payload["entry"] = nullptr;
                s.record(EventKind::answer_committed, std::move(payload), clock_.now_iso8601());
                continue;
            }
            ContextEntry entry{elicited_key(q, a.file_name), *a.text, Scope::local, Provenance::user_added,
                               std::nullopt, clock_.now_iso8601()};
            if (std::find(keys.begin(), keys.end(), entry.key) == keys.end()) keys.push_back(entry.key);
            put_context(s, std::move(entry), EventKind::answer_committed, std::move(payload));
            added = true;
        }
        const auto prompt = draft_prompt(s, n, keys);
        const Completion c = call(s, TemplateId::generate_draft, "generate_draft",
                                  {{Role::system, prompt.system}, {Role::user, prompt.user}});
        return record_draft(s, node, c.text, std::move(keys),
                            added ? DraftLineage::regenerated_with_context : DraftLineage::regenerated);
    });
}

// ---------------------------------------------------------------------------
// Decomposition

std::vector<NodeId> CurationEngine::generate_subtasks(Session& session, const NodeId& node) {
    return transact(session, [&](Session& s) {
        const TaskNode n = s.tree().node(node);
        require_undecomposed(n);
        const auto prompt = prompts_.render(TemplateId::generate_subtasks,
                                            {{"user_context", s.context().render_scope(Scope::global)},
                                             {"main_purpose", s.goal()},
                                             {"tree_outline", s.tree().outline()},
                                             {"task_name", n.title},
                                             {"task_description", n.description}});
        auto specs = call_with_reask(s, TemplateId::generate_subtasks, "generate_subtasks",
                                     {{Role::system, prompt.system}, {Role::user, prompt.user}},
                                     ErrorCode::unparseable_subtasks, kSubtaskReask,
                                     [](const std::string& text) { return parse_subtask_list(text); });
        if (specs.size() > TaskTree::kMaxFanout) {
            warn(s, "model proposed more subtasks than the fanout limit; extra items dropped",
                 Json{{"node", node}, {"proposed", specs.size()}, {"limit", TaskTree::kMaxFanout}});
            specs.resize(TaskTree::kMaxFanout);
        }
        const auto ids = next_node_ids(s.tree(), specs.size());
        s.record(EventKind::subtasks_attached,
                 Json{{"parent", node}, {"kind", "standard"}, {"subtasks", subtasks_json(ids, specs)}},
                 clock_.now_iso8601());
        return ids;
    });
}

Verdict CurationEngine::detect_actionability(Session& session, const NodeId& node,
                                             std::optional<DetectionStrategy> strategy) {
    return transact(session, [&](Session& s) {
        const DetectionStrategy st = strategy.value_or(DetectionStrategy::of(config_.default_strategy));
        const TaskNode n = s.tree().node(node);

        std::optional<std::string> draft;
        if (st.includes_draft) {
            // Throwaway draft: shown to the model only, never stored.
            const auto keys = s.context().keys(Scope::local);
            const auto prompt = draft_prompt(s, n, keys);
            draft = call(s, TemplateId::generate_draft, "detect_draft",
                         {{Role::system, prompt.system}, {Role::user, prompt.user}})
                        .text;
        }
        const auto prompt = prompts_.detection_prompt(
            st, n.title, n.description, st.includes_level ? std::optional<int>(n.level) : std::nullopt,
            draft ? std::optional<std::string_view>(*draft) : std::nullopt);
        Verdict v = call_with_reask(s, TemplateId::detect_subtask, "detect_subtask",
                                    {{Role::system, prompt.system}, {Role::user, prompt.user}},
                                    ErrorCode::unparseable_verdict, kVerdictReask,
                                    [&](const std::string& text) { return parse_yes_no(text, st.polarity); });
        s.record(EventKind::detection,
                 Json{{"node", node},
                      {"strategy", to_string(st.variant)},
                      {"needs_decomposition", v.needs_decomposition},
                      {"reasoning", v.reasoning}},
                 clock_.now_iso8601());
        return v;
    });
}

ForkVerdict CurationEngine::detect_fork(Session& session, const NodeId& node) {
    return transact(session, [&](Session& s) {
        const TaskNode n = s.tree().node(node);
        const SessionEvent* det = s.last_event_for(EventKind::detection, node);
        if (det == nullptr || !det->payload.at("needs_decomposition").get<bool>()) {
            throw Error(ErrorCode::precondition_failed,
                        "fork detection requires the node to be flagged for decomposition first",
                        Json{{"node", node}});
        }
        ForkVerdict fv;
        if (s.context().empty(Scope::local)) {
            fv.reasoning = "No local context entries to fork over.";
        } else {
            const auto prompt = prompts_.render(TemplateId::fork_decision,
                                                {{"main_purpose", s.goal()},
                                                 {"task_name", n.title},
                                                 {"task_description", n.description},
                                                 {"context_history", render_context_history(s.context())}});
            const Verdict v = call_with_reask(
                s, TemplateId::fork_decision, "fork_decision",
                {{Role::system, prompt.system}, {Role::user, prompt.user}}, ErrorCode::unparseable_verdict,
                kVerdictReask,
                [](const std::string& text) { return parse_yes_no(text, Polarity::yes_means_decompose); });
            fv = {v.needs_decomposition, v.reasoning};
        }
        s.record(EventKind::fork_decision,
                 Json{{"node", node}, {"should_fork", fv.should_fork}, {"reasoning", fv.reasoning}},
                 clock_.now_iso8601());
        return fv;
    });
}

std::vector<NodeId> CurationEngine::fork_task(Session& session, const NodeId& node,
                                              std::span<const std::string> accepted_keys) {
    return transact(session, [&](Session& s) {
        const TaskNode n = s.tree().node(node);
        require_undecomposed(n);
        const SessionEvent* fd = s.last_event_for(EventKind::fork_decision, node);
        if (fd == nullptr || !fd->payload.at("should_fork").get<bool>()) {
            throw Error(ErrorCode::precondition_failed, "node was not marked for forking", Json{{"node", node}});
        }
        const std::vector<std::string> keys = resolve_draft_keys(s, accepted_keys);
        if (keys.empty()) {
            throw Error(ErrorCode::precondition_failed, "forking needs at least one context entry",
                        Json{{"node", node}});
        }
        const auto prompt = prompts_.render(TemplateId::extract_fork_entities,
                                            {{"main_purpose", s.goal()},
                                             {"task_name", n.title},
                                             {"task_description", n.description},
                                             {"user_context", s.context().render_selected(keys)}});
        const Completion c = call(s, TemplateId::extract_fork_entities, "extract_fork_entities",
                                  {{Role::system, prompt.system}, {Role::user, prompt.user}});
        std::vector<SubtaskSpec> entities;
        try {
            if (!to_lower(trim(c.text)).starts_with("none")) entities = parse_subtask_list(c.text);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::unparseable_subtasks) throw;
        }
        if (entities.empty()) {
            throw Error(ErrorCode::no_entities_found, "no entities to fork over in the selected context",
                        Json{{"node", node}, {"keys", keys}});
        }
        if (entities.size() > TaskTree::kMaxFanout) {
            warn(s, "more fork entities than the fanout limit; extra entities dropped",
                 Json{{"node", node}, {"proposed", entities.size()}, {"limit", TaskTree::kMaxFanout}});
            entities.resize(TaskTree::kMaxFanout);
        }
        for (auto& e : entities) e.title = n.title + ": " + e.title;
        const auto ids = next_node_ids(s.tree(), entities.size());
        s.record(EventKind::subtasks_attached,
                 Json{{"parent", node}, {"kind", "fork"}, {"subtasks", subtasks_json(ids, entities)}},
                 clock_.now_iso8601());
        return ids;
    });
}

// ---------------------------------------------------------------------------
// Selection and reuse

std::vector<SelectionCandidate> CurationEngine::select_context(Session& session, const NodeId& node,
                                                               SelectionPurpose purpose) {
    return transact(session, [&](Session& s) {
        if (!selection_enabled(s.mode())) disabled(s.mode(), "select_context");
        const TaskNode n = s.tree().node(node);
        const auto local_keys = s.context().keys(Scope::local);
        std::vector<SelectionCandidate> candidates;
        if (local_keys.empty()) {
            if (purpose == SelectionPurpose::forking) {
                throw Error(ErrorCode::precondition_failed, "no local context to select from for forking",
                            Json{{"node", node}});
            }
        } else {
            const TemplateId id = purpose == SelectionPurpose::drafting ? TemplateId::select_context_draft
                                                                        : TemplateId::select_context_fork;
            const auto prompt = prompts_.render(id, {{"main_purpose", s.goal()},
                                                     {"task_name", n.title},
                                                     {"task_description", n.description},
                                                     {"context_history", render_context_history(s.context())}});
            const Completion c = call(s, id, std::string(to_string(id)),
                                      {{Role::system, prompt.system}, {Role::user, prompt.user}});
            const auto parsed = parse_key_selection(c.text, local_keys);
            if (!parsed.dropped_lines.empty()) {
                warn(s, "selection lines without a valid context key were dropped",
                     Json{{"node", node}, {"lines", parsed.dropped_lines}});
            }
            for (const auto& sel : parsed.selections) candidates.push_back({sel.key, sel.reason, true});
        }
        Json cand = Json::array();
        for (const auto& c : candidates) {
            cand.push_back({{"key", c.key}, {"reason", c.reason}, {"accepted", c.accepted}});
        }
        s.record(EventKind::context_selected,
                 Json{{"node", node}, {"purpose", to_string(purpose)}, {"candidates", std::move(cand)}},
                 clock_.now_iso8601());
        return candidates;
    });
}

std::vector<std::string> CurationEngine::resolve_draft_keys(const Session& s,
                                                            std::span<const std::string> accepted) const {
    if (!selection_enabled(s.mode())) return s.context().keys(Scope::local);
    std::vector<std::string> keys;
    for (const auto& k : accepted) {
        if (!s.context().contains(Scope::local, k)) {
            throw Error(ErrorCode::unknown_key, "unknown local context key '" + k + "'", Json{{"key", k}});
        }
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    return keys;
}

std::string CurationEngine::draft_user_context(const Session& s, std::span<const std::string> keys) const {
    std::string out = s.context().render_scope(Scope::global);
    if (!keys.empty()) {
        out += '\n';
        out += s.context().render_selected(keys);
    }
    return out;
}

RenderedPrompt CurationEngine::draft_prompt(const Session& s, const TaskNode& node,
                                            std::span<const std::string> keys) const {
    return prompts_.render(TemplateId::generate_draft, {{"main_purpose", s.goal()},
                                                        {"user_context", draft_user_context(s, keys)},
                                                        {"current_task", node.title},
                                                        {"task_description", node.description}});
}

DraftCandidate CurationEngine::record_draft(Session& s, const NodeId& node, std::string content,
                                            std::vector<std::string> keys, DraftLineage lineage) {
    DraftCandidate d;
    d.node = node;
    d.content = std::move(content);
    d.context_keys_used = std::move(keys);
    const auto it = s.drafts().find(node);
    d.revision = it == s.drafts().end() ? 1 : static_cast<int>(it->second.size()) + 1;
    d.lineage = lineage;
    s.record(EventKind::draft_generated, Json{{"candidate", d.to_json()}}, clock_.now_iso8601());
    return d;
}

DraftCandidate CurationEngine::generate_draft(Session& session, const NodeId& node,
                                              std::span<const std::string> accepted_keys) {
    return transact(session, [&](Session& s) {
        const TaskNode n = s.tree().node(node);
        std::vector<std::string> keys = resolve_draft_keys(s, accepted_keys);
        const auto prompt = draft_prompt(s, n, keys);
        const Completion c = call(s, TemplateId::generate_draft, "generate_draft",
                                  {{Role::system, prompt.system}, {Role::user, prompt.user}});
        const bool first = s.latest_draft(node) == nullptr;
        return record_draft(s, node, c.text, std::move(keys),
                            first ? DraftLineage::initial : DraftLineage::regenerated);
    });
}

DraftCandidate CurationEngine::iterate_draft(Session& session, const NodeId& node,
                                             const DraftCandidate& candidate, std::string_view instruction) {
    return transact(session, [&](Session& s) {
        if (is_blank(instruction)) throw Error(ErrorCode::bad_request, "iteration instruction is empty");
        const TaskNode n = s.tree().node(node);
        const DraftCandidate* stored = s.find_draft(node, candidate.revision);
        if (candidate.node != node || stored == nullptr || *stored != candidate) {
            throw Error(ErrorCode::precondition_failed, "draft does not belong to this node",
                        Json{{"node", node}, {"revision", candidate.revision}});
        }
        std::vector<std::string> keys = resolve_draft_keys(s, candidate.context_keys_used);
        const auto prompt = draft_prompt(s, n, keys);
        const Completion c = call(s, TemplateId::generate_draft, "iterate_draft",
                                  {{Role::system, prompt.system},
                                   {Role::user, prompt.user},
                                   {Role::assistant, candidate.content},
                                   {Role::user, std::string(instruction)}});
        return record_draft(s, node, c.text, std::move(keys), DraftLineage::iterated);
    });
}

std::string CurationEngine::save_draft(Session& session, const NodeId& node, const DraftCandidate& candidate) {
    return transact(session, [&](Session& s) {
        const TaskNode n = s.tree().node(node);
        const DraftCandidate* stored = s.find_draft(node, candidate.revision);
        if (candidate.node != node || stored == nullptr || *stored != candidate) {
            throw Error(ErrorCode::precondition_failed, "draft does not belong to this node",
                        Json{{"node", node}, {"revision", candidate.revision}});
        }
        std::string key = n.title + std::string(kDraftKeySuffix);
        put_context(s,
                    ContextEntry{key, candidate.content, Scope::local, Provenance::saved_draft, node,
                                 clock_.now_iso8601()},
                    EventKind::draft_saved, Json{{"node", node}, {"revision", candidate.revision}});
        return key;
    });
}

void CurationEngine::add_context(Session& session, std::string key, std::string value) {
    transact(session, [&](Session& s) {
        put_context(s,
                    ContextEntry{std::move(key), std::move(value), Scope::local, Provenance::user_added,
                                 std::nullopt, clock_.now_iso8601()},
                    EventKind::context_added);
    });
}

}  // namespace plancurate

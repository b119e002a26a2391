#pragma once

#include "plancurate/curation_types.hpp"
#include "plancurate/llm_provider.hpp"
#include "plancurate/output_parsing.hpp"
#include "plancurate/prompt_library.hpp"
#include "plancurate/session.hpp"
#include "plancurate/util.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plancurate {

struct EngineConfig {
    DetectionVariant default_strategy = PromptLibrary::kProductionVariant;
    RequestParams params;
    std::map<TemplateId, RequestParams> overrides;
};

/// Orchestrates decomposition (generation, detection, forking) and context
/// curation (elicitation, selection, reuse) over a Session.
///
/// Every operation is all-or-nothing with respect to the session: it runs
/// against a working copy that replaces the caller's session only when the
/// operation succeeds. Provider traffic of a successful operation is
/// recorded as provider_call events.
class CurationEngine {
public:
    static constexpr std::size_t kElicitedKeyChars = 80;
    static constexpr std::string_view kDraftKeySuffix = " — draft";
    static constexpr std::string_view kVerdictReask = "Answer with exactly 'Answer: Yes' or 'Answer: No'.";
    static constexpr std::string_view kSubtaskReask =
        "Answer with a numbered list in the format: <number>. <name> — <description> — <estimated duration>";

    explicit CurationEngine(Provider& provider, const PromptLibrary& prompts = PromptLibrary::builtin(),
                            EngineConfig config = {}, Clock clock = Clock{});

    [[nodiscard]] Session start_session(std::string id, std::string goal, AblationMode mode) const;

    // -- context elicitation ------------------------------------------------
    std::vector<ElicitationQuestion> elicit_global_context(Session& session);
    void commit_elicited(Session& session, std::span<const ElicitedAnswer> answers);
    std::vector<ElicitationQuestion> elicit_draft_context(Session& session, const NodeId& node,
                                                          const DraftCandidate& candidate);
    /// Commits draft-iteration answers as local user_added entries and
    /// regenerates with them added to the accepted keys.
    DraftCandidate regenerate_with_context(Session& session, const NodeId& node,
                                           std::span<const ElicitedAnswer> answers,
                                           std::span<const std::string> accepted_keys);

    // -- decomposition ------------------------------------------------------
    std::vector<NodeId> generate_subtasks(Session& session, const NodeId& node);
    Verdict detect_actionability(Session& session, const NodeId& node,
                                 std::optional<DetectionStrategy> strategy = std::nullopt);
    ForkVerdict detect_fork(Session& session, const NodeId& node);
    std::vector<NodeId> fork_task(Session& session, const NodeId& node,
                                  std::span<const std::string> accepted_keys);

    // -- selection and reuse ------------------------------------------------
    std::vector<SelectionCandidate> select_context(Session& session, const NodeId& node,
                                                   SelectionPurpose purpose);
    DraftCandidate generate_draft(Session& session, const NodeId& node,
                                  std::span<const std::string> accepted_keys);
    DraftCandidate iterate_draft(Session& session, const NodeId& node, const DraftCandidate& candidate,
                                 std::string_view instruction);
    std::string save_draft(Session& session, const NodeId& node, const DraftCandidate& candidate);

    /// User-added local context ("Location preference: Midwest of US").
    void add_context(Session& session, std::string key, std::string value);

    [[nodiscard]] const EngineConfig& config() const { return config_; }
    [[nodiscard]] const Clock& clock() const { return clock_; }

private:
    template <typename F>
    auto transact(Session& session, F&& body);

    Completion call(Session& s, TemplateId id, std::string tag, std::vector<ChatMessage> messages);

    template <typename Parse>
    auto call_with_reask(Session& s, TemplateId id, std::string tag, std::vector<ChatMessage> messages,
                         ErrorCode retry_on, std::string_view reask, Parse&& parse);

    [[nodiscard]] RequestParams params_for(TemplateId id) const;
    [[nodiscard]] std::vector<std::string> resolve_draft_keys(const Session& s,
                                                              std::span<const std::string> accepted) const;
    [[nodiscard]] std::string draft_user_context(const Session& s, std::span<const std::string> keys) const;
    [[nodiscard]] RenderedPrompt draft_prompt(const Session& s, const TaskNode& node,
                                              std::span<const std::string> keys) const;
    DraftCandidate record_draft(Session& s, const NodeId& node, std::string content,
                                std::vector<std::string> keys, DraftLineage lineage);
    void put_context(Session& s, ContextEntry entry, EventKind kind, Json extra = Json::object());
    void warn(Session& s, std::string message, Json detail = nullptr);

    Provider& provider_;
    const PromptLibrary& prompts_;
    EngineConfig config_;
    Clock clock_;
};

/// Bullet list of local keys offered to the selection and fork prompts.
std::string render_context_history(const ContextStore& store);

}  // namespace plancurate

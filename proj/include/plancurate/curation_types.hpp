#pragma once

#include "plancurate/errors.hpp"
#include "plancurate/task_graph.hpp"

#include <optional>
#include <string>
#include <vector>

namespace plancurate {

/// Study conditions. Context reuse (saving drafts into local context) is
/// active in every mode.
enum class AblationMode {
    reuse_only,           ///< no elicitation, no selection: all local context is used
    selection_and_reuse,  ///< no elicitation
    full_curation,
};

std::string_view to_string(AblationMode m);
AblationMode parse_ablation_mode(std::string_view text, ErrorCode on_error = ErrorCode::bad_config);

[[nodiscard]] inline bool elicitation_enabled(AblationMode m) { return m == AblationMode::full_curation; }
[[nodiscard]] inline bool selection_enabled(AblationMode m) { return m != AblationMode::reuse_only; }

struct ElicitationQuestion {
    std::string id;
    std::string question;
    bool expects_file = false;
    std::optional<std::string> answer;  ///< "skipped" when the user skipped it
    bool answered = false;

    [[nodiscard]] Json to_json() const;
    static ElicitationQuestion from_json(const Json& j);

    friend bool operator==(const ElicitationQuestion&, const ElicitationQuestion&) = default;
};

inline constexpr std::string_view kSkippedAnswer = "skipped";

enum class DraftLineage { initial, regenerated, regenerated_with_context, iterated };

std::string_view to_string(DraftLineage l);
DraftLineage parse_draft_lineage(std::string_view text);

struct DraftCandidate {
    NodeId node;
    std::string content;
    std::vector<std::string> context_keys_used;
    int revision = 1;
    DraftLineage lineage = DraftLineage::initial;

    [[nodiscard]] Json to_json() const;
    static DraftCandidate from_json(const Json& j);

    friend bool operator==(const DraftCandidate&, const DraftCandidate&) = default;
};

/// A user's response to one elicitation question. `file_name` is set when
/// the answer is the text of an uploaded document.
struct ElicitedAnswer {
    std::string question_id;
    std::optional<std::string> text;  ///< nullopt = skipped
    std::optional<std::string> file_name;
};

enum class SelectionPurpose { drafting, forking };

std::string_view to_string(SelectionPurpose p);
SelectionPurpose parse_selection_purpose(std::string_view text, ErrorCode on_error = ErrorCode::bad_request);

struct SelectionCandidate {
    std::string key;
    std::string reason;
    bool accepted = true;

    friend bool operator==(const SelectionCandidate&, const SelectionCandidate&) = default;
};

struct ForkVerdict {
    bool should_fork = false;
    std::string reasoning;
};

}  // namespace plancurate

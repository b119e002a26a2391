#pragma once

#include "plancurate/errors.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace plancurate {

enum class TemplateId {
    elicit_global,
    elicit_draft_iteration,
    select_context_draft,
    select_context_fork,
    generate_subtasks,
    detect_subtask,
    fork_decision,
    generate_draft,
    extract_fork_entities,
};

enum class DetectionVariant {
    zero_shot,
    few_shot,
    few_shot_cot,
    few_shot_cot_tree,
    few_shot_cot_draft,
    few_shot_cot_tree_draft,
};

/// How a raw Yes/No maps onto "needs decomposition". The zero-shot and
/// few-shot prompts ask whether the task must be decomposed; the CoT prompts
/// ask whether it is specific and actionable.
enum class Polarity { yes_means_decompose, yes_means_actionable };

std::string_view to_string(TemplateId id);
std::string_view to_string(DetectionVariant v);
std::string_view to_string(Polarity p);
TemplateId parse_template_id(std::string_view text);
DetectionVariant parse_detection_variant(std::string_view text,
                                         ErrorCode on_error = ErrorCode::bad_config);

/// Every variant in report order.
const std::vector<DetectionVariant>& all_detection_variants();

struct DetectionStrategy {
    DetectionVariant variant = DetectionVariant::few_shot_cot_tree;
    bool includes_level = false;
    bool includes_draft = false;
    bool chain_of_thought = false;
    int shot_count = 0;
    Polarity polarity = Polarity::yes_means_decompose;

    static DetectionStrategy of(DetectionVariant variant);

    friend bool operator==(const DetectionStrategy&, const DetectionStrategy&) = default;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

struct RenderedPrompt {
    std::string system;
    std::string user;
    std::optional<DetectionStrategy> strategy;
};

/// A system/user text pair with `{name}` placeholders; `{{` and `}}` are
/// literal braces.
class PromptTemplate {
public:
    /// Parses the fixture format:
    ///
    ///     ---
    ///     id: <template id>
    ///     variant: <detection variant>      (detect_subtask only)
    ///     placeholders: [a, b, c]
    ///     ---
    ///     @system
    ///     ...
    ///     @user
    ///     ...
    static PromptTemplate parse(std::string_view file_text);

    /// Substitution is literal: binding contents are never re-scanned.
    [[nodiscard]] RenderedPrompt render(const Bindings& bindings) const;

    [[nodiscard]] TemplateId id() const { return id_; }
    [[nodiscard]] const std::optional<DetectionVariant>& variant() const { return variant_; }
    [[nodiscard]] const std::set<std::string, std::less<>>& placeholders() const {
        return placeholders_;
    }
    [[nodiscard]] const std::string& system_text() const { return system_text_; }
    [[nodiscard]] const std::string& user_text() const { return user_text_; }

private:
    struct Segment {
        bool is_placeholder;
        std::string text;  // literal text, or placeholder name
    };

    static std::vector<Segment> tokenize(std::string_view text);
    static std::string substitute(const std::vector<Segment>& segments, const Bindings& bindings);

    TemplateId id_ = TemplateId::generate_draft;
    std::optional<DetectionVariant> variant_;
    std::string system_text_;
    std::string user_text_;
    std::vector<Segment> system_segments_;
    std::vector<Segment> user_segments_;
    std::set<std::string, std::less<>> placeholders_;
};

class PromptLibrary {
public:
    /// Templates compiled into the library from the prompts/ fixtures.
    static const PromptLibrary& builtin();

    /// Loads every *.txt fixture in `dir`; missing templates fall back to
    /// the built-in ones.
    static PromptLibrary load_directory(const std::filesystem::path& dir);

    void add(PromptTemplate tmpl);

    /// `detect_subtask` resolves to the production variant
    /// (few_shot_cot_tree).
    [[nodiscard]] const PromptTemplate& get(TemplateId id) const;
    [[nodiscard]] const PromptTemplate& detection(DetectionVariant variant) const;

    [[nodiscard]] RenderedPrompt render(TemplateId id, const Bindings& bindings) const;

    /// Builds the subtask-detection prompt for `strategy`. `level` must be
    /// given exactly when the strategy uses the tree level, `draft` exactly
    /// when it uses a draft.
    [[nodiscard]] RenderedPrompt detection_prompt(const DetectionStrategy& strategy,
                                                  std::string_view title,
                                                  std::string_view description,
                                                  std::optional<int> level,
                                                  std::optional<std::string_view> draft) const;

    static constexpr DetectionVariant kProductionVariant = DetectionVariant::few_shot_cot_tree;

private:
    std::map<TemplateId, PromptTemplate> templates_;
    std::map<DetectionVariant, PromptTemplate> detection_;
};

}  // namespace plancurate

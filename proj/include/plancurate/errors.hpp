#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace plancurate {

using Json = nlohmann::ordered_json;

enum class ErrorCode {
    // task_graph
    empty_goal,
    unknown_node,
    already_decomposed,
    empty_subtask_list,
    tree_limit,
    // context_store
    invalid_entry,
    unknown_key,
    // prompt_library
    missing_binding,
    unknown_binding,
    unreplaced_placeholder,
    strategy_input_mismatch,
    malformed_template,
    // llm_provider
    provider_http,
    provider_timeout,
    script_exhausted,
    script_mismatch,
    unparseable_subtasks,
    unparseable_verdict,
    no_valid_keys,
    // curation_engine
    feature_disabled,
    unknown_question,
    no_entities_found,
    precondition_failed,
    // session
    io_error,
    schema_mismatch,
    corrupt_session,
    // eval_harness
    malformed_suite,
    // cli / service
    bad_config,
    bad_request,
    not_found,
    conflict,
    provider_unavailable,
    addr_in_use,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library. `detail` carries structured
/// context (the missing key, the HTTP status, ...) and is echoed verbatim
/// in service error bodies.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, Json detail = nullptr)
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] const Json& detail() const noexcept { return detail_; }

    /// True for failures caused by the model endpoint rather than by the
    /// caller or by model output.
    [[nodiscard]] bool is_provider_failure() const noexcept;

private:
    ErrorCode code_;
    Json detail_;
};

}  // namespace plancurate

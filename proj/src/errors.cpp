#include "plancurate/errors.hpp"

namespace plancurate {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::empty_goal: return "empty_goal";
        case ErrorCode::unknown_node: return "unknown_node";
        case ErrorCode::already_decomposed: return "already_decomposed";
        case ErrorCode::empty_subtask_list: return "empty_subtask_list";
        case ErrorCode::tree_limit: return "tree_limit";
        case ErrorCode::invalid_entry: return "invalid_entry";
        case ErrorCode::unknown_key: return "unknown_key";
        case ErrorCode::missing_binding: return "missing_binding";
        case ErrorCode::unknown_binding: return "unknown_binding";
        case ErrorCode::unreplaced_placeholder: return "unreplaced_placeholder";
        case ErrorCode::strategy_input_mismatch: return "strategy_input_mismatch";
        case ErrorCode::malformed_template: return "malformed_template";
        case ErrorCode::provider_http: return "provider_http";
        case ErrorCode::provider_timeout: return "provider_timeout";
        case ErrorCode::script_exhausted: return "script_exhausted";
        case ErrorCode::script_mismatch: return "script_mismatch";
        case ErrorCode::unparseable_subtasks: return "unparseable_subtasks";
        case ErrorCode::unparseable_verdict: return "unparseable_verdict";
        case ErrorCode::no_valid_keys: return "no_valid_keys";
        case ErrorCode::feature_disabled: return "feature_disabled";
        case ErrorCode::unknown_question: return "unknown_question";
        case ErrorCode::no_entities_found: return "no_entities_found";
        case ErrorCode::precondition_failed: return "precondition_failed";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::schema_mismatch: return "schema_mismatch";
        case ErrorCode::corrupt_session: return "corrupt_session";
        case ErrorCode::malformed_suite: return "malformed_suite";
        case ErrorCode::bad_config: return "bad_config";
        case ErrorCode::bad_request: return "bad_request";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::conflict: return "conflict";
        case ErrorCode::provider_unavailable: return "provider_unavailable";
        case ErrorCode::addr_in_use: return "addr_in_use";
    }
    return "unknown";
}

bool Error::is_provider_failure() const noexcept {
    switch (code_) {
        case ErrorCode::provider_http:
        case ErrorCode::provider_timeout:
        case ErrorCode::script_exhausted:
        case ErrorCode::script_mismatch:
        case ErrorCode::provider_unavailable:
            return true;
        default:
            return false;
    }
}

}  // namespace plancurate

#pragma once

#include "plancurate/errors.hpp"
#include "plancurate/task_graph.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plancurate {

enum class Scope { global, local };
enum class Provenance { goal_statement, elicited_answer, uploaded_document, saved_draft, user_added };

std::string_view to_string(Scope s);
std::string_view to_string(Provenance p);
Scope parse_scope(std::string_view text, ErrorCode on_error = ErrorCode::corrupt_session);
Provenance parse_provenance(std::string_view text, ErrorCode on_error = ErrorCode::corrupt_session);

struct ContextEntry {
    std::string key;
    std::string value;
    Scope scope = Scope::local;
    Provenance provenance = Provenance::user_added;
    std::optional<NodeId> source_node;
    std::string created_at;

    /// Throws invalid_entry if the entry breaks a key/scope/provenance rule.
    void check() const;

    [[nodiscard]] Json to_json() const;
    static ContextEntry from_json(const Json& j);

    friend bool operator==(const ContextEntry&, const ContextEntry&) = default;
};

/// Metadata row for checklists; never carries the value.
struct ContextKeyInfo {
    std::string key;
    Provenance provenance;
    std::optional<NodeId> source_node;

    friend bool operator==(const ContextKeyInfo&, const ContextKeyInfo&) = default;
};

/// Two-scope key-value memory. Entries keep their first insertion position;
/// re-putting an existing (scope, key) replaces value and metadata in place.
class ContextStore {
public:
    static constexpr std::size_t kMaxValueBytes = 64 * 1024;
    static constexpr std::string_view kEmptyRendering = "(no context)";

    /// Returns the entry that was replaced, if any.
    std::optional<ContextEntry> put(ContextEntry entry);

    [[nodiscard]] std::string render_scope(Scope scope) const;
    [[nodiscard]] std::string render_selected(std::span<const std::string> keys) const;
    [[nodiscard]] std::vector<ContextKeyInfo> list_keys(Scope scope) const;

    [[nodiscard]] const ContextEntry* find(Scope scope, std::string_view key) const;
    [[nodiscard]] bool contains(Scope scope, std::string_view key) const {
        return find(scope, key) != nullptr;
    }
    [[nodiscard]] std::vector<std::string> keys(Scope scope) const;
    [[nodiscard]] const std::vector<ContextEntry>& entries() const { return entries_; }
    [[nodiscard]] bool empty(Scope scope) const;

    [[nodiscard]] Json to_json() const;
    static ContextStore from_json(const Json& j);

    friend bool operator==(const ContextStore&, const ContextStore&) = default;

private:
    std::vector<ContextEntry> entries_;
};

/// "key: value" lines, or "(no context)" for an empty list.
std::string render_entries(std::span<const ContextEntry* const> entries);

}  // namespace plancurate

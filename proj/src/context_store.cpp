#include "plancurate/context_store.hpp"

#include "plancurate/util.hpp"

#include <algorithm>

namespace plancurate {

namespace {

constexpr EnumNames<Scope, 2> kScopeNames{{{
    {Scope::global, "global"},
    {Scope::local, "local"},
}}};

constexpr EnumNames<Provenance, 5> kProvenanceNames{{{
    {Provenance::goal_statement, "goal_statement"},
    {Provenance::elicited_answer, "elicited_answer"},
    {Provenance::uploaded_document, "uploaded_document"},
    {Provenance::saved_draft, "saved_draft"},
    {Provenance::user_added, "user_added"},
}}};

[[noreturn]] void invalid(const std::string& msg, const std::string& key) {
    throw Error(ErrorCode::invalid_entry, msg, Json{{"key", key}});
}

}  // namespace

std::string_view to_string(Scope s) { return kScopeNames.name(s); }
std::string_view to_string(Provenance p) { return kProvenanceNames.name(p); }

Scope parse_scope(std::string_view text, ErrorCode on_error) {
    return kScopeNames.parse(text, on_error, "scope");
}

Provenance parse_provenance(std::string_view text, ErrorCode on_error) {
    return kProvenanceNames.parse(text, on_error, "provenance");
}

void ContextEntry::check() const {
    if (is_blank(key)) invalid("context key is empty", key);
    if (value.size() > ContextStore::kMaxValueBytes) {
        throw Error(ErrorCode::invalid_entry, "context value exceeds 64 KiB",
                    Json{{"key", key}, {"bytes", value.size()}, {"limit", ContextStore::kMaxValueBytes}});
    }
    switch (provenance) {
        case Provenance::saved_draft:
            if (!source_node) invalid("saved draft entry has no source node", key);
            if (scope != Scope::local) invalid("saved draft entry must be local", key);
            break;
        case Provenance::goal_statement:
        case Provenance::elicited_answer:
        case Provenance::uploaded_document:
            if (scope != Scope::global) invalid("elicited entries must be global", key);
            break;
        case Provenance::user_added:
            break;
    }
}

Json ContextEntry::to_json() const {
    return Json{
        {"key", key},
        {"value", value},
        {"scope", to_string(scope)},
        {"provenance", to_string(provenance)},
        {"source_node", source_node ? Json(*source_node) : Json(nullptr)},
        {"created_at", created_at},
    };
}

ContextEntry ContextEntry::from_json(const Json& j) {
    ContextEntry e;
    try {
        e.key = j.at("key").get<std::string>();
        e.value = j.at("value").get<std::string>();
        e.scope = parse_scope(j.at("scope").get<std::string>());
        e.provenance = parse_provenance(j.at("provenance").get<std::string>());
        if (!j.at("source_node").is_null()) e.source_node = j.at("source_node").get<std::string>();
        e.created_at = j.at("created_at").get<std::string>();
    } catch (const Json::exception& ex) {
        throw Error(ErrorCode::corrupt_session, std::string("malformed context entry: ") + ex.what());
    }
    return e;
}

std::optional<ContextEntry> ContextStore::put(ContextEntry entry) {
    entry.check();
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const ContextEntry& e) {
        return e.scope == entry.scope && e.key == entry.key;
    });
    if (it == entries_.end()) {
        entries_.push_back(std::move(entry));
        return std::nullopt;
    }
    ContextEntry previous = std::move(*it);
    *it = std::move(entry);
    return previous;
}

const ContextEntry* ContextStore::find(Scope scope, std::string_view key) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const ContextEntry& e) {
        return e.scope == scope && e.key == key;
    });
    return it == entries_.end() ? nullptr : &*it;
}

bool ContextStore::empty(Scope scope) const {
    return std::none_of(entries_.begin(), entries_.end(),
                        [&](const ContextEntry& e) { return e.scope == scope; });
}

std::vector<std::string> ContextStore::keys(Scope scope) const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
        if (e.scope == scope) out.push_back(e.key);
    }
    return out;
}

std::string render_entries(std::span<const ContextEntry* const> entries) {
    if (entries.empty()) return std::string(ContextStore::kEmptyRendering);
    std::string out;
    for (const ContextEntry* e : entries) {
        if (!out.empty()) out += '\n';
        out += e->key;
        out += ": ";
        out += e->value;
    }
    return out;
}

std::string ContextStore::render_scope(Scope scope) const {
    std::vector<const ContextEntry*> picked;
    for (const auto& e : entries_) {
        if (e.scope == scope) picked.push_back(&e);
    }
    return render_entries(picked);
}

std::string ContextStore::render_selected(std::span<const std::string> keys) const {
    std::vector<const ContextEntry*> picked;
    picked.reserve(keys.size());
    for (const auto& k : keys) {
        const ContextEntry* e = find(Scope::local, k);
        if (e == nullptr) {
            throw Error(ErrorCode::unknown_key, "unknown local context key '" + k + "'", Json{{"key", k}});
        }
        picked.push_back(e);
    }
    return render_entries(picked);
}

std::vector<ContextKeyInfo> ContextStore::list_keys(Scope scope) const {
    std::vector<ContextKeyInfo> out;
    for (const auto& e : entries_) {
        if (e.scope == scope) out.push_back({e.key, e.provenance, e.source_node});
    }
    return out;
}

Json ContextStore::to_json() const {
    Json arr = Json::array();
    for (const auto& e : entries_) arr.push_back(e.to_json());
    return arr;
}

ContextStore ContextStore::from_json(const Json& j) {
    if (!j.is_array()) throw Error(ErrorCode::corrupt_session, "context must be an array");
    ContextStore store;
    for (const auto& item : j) {
        ContextEntry e = ContextEntry::from_json(item);
        try {
            e.check();
        } catch (const Error& err) {
            throw Error(ErrorCode::corrupt_session, err.what(), err.detail());
        }
        if (store.contains(e.scope, e.key)) {
            throw Error(ErrorCode::corrupt_session, "duplicate context key '" + e.key + "'");
        }
        store.entries_.push_back(std::move(e));
    }
    return store;
}

}  // namespace plancurate

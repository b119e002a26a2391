#include "plancurate/curation_types.hpp"

#include "plancurate/util.hpp"

namespace plancurate {

namespace {

constexpr EnumNames<AblationMode, 3> kModeNames{{{
    {AblationMode::reuse_only, "reuse_only"},
    {AblationMode::selection_and_reuse, "selection_and_reuse"},
    {AblationMode::full_curation, "full_curation"},
}}};

constexpr EnumNames<DraftLineage, 4> kLineageNames{{{
    {DraftLineage::initial, "initial"},
    {DraftLineage::regenerated, "regenerated"},
    {DraftLineage::regenerated_with_context, "regenerated_with_context"},
    {DraftLineage::iterated, "iterated"},
}}};

constexpr EnumNames<SelectionPurpose, 2> kPurposeNames{{{
    {SelectionPurpose::drafting, "drafting"},
    {SelectionPurpose::forking, "forking"},
}}};

}  // namespace

std::string_view to_string(AblationMode m) { return kModeNames.name(m); }

AblationMode parse_ablation_mode(std::string_view text, ErrorCode on_error) {
    return kModeNames.parse(text, on_error, "mode");
}

std::string_view to_string(DraftLineage l) { return kLineageNames.name(l); }

DraftLineage parse_draft_lineage(std::string_view text) {
    return kLineageNames.parse(text, ErrorCode::corrupt_session, "lineage");
}

std::string_view to_string(SelectionPurpose p) { return kPurposeNames.name(p); }

SelectionPurpose parse_selection_purpose(std::string_view text, ErrorCode on_error) {
    return kPurposeNames.parse(text, on_error, "purpose");
}

Json ElicitationQuestion::to_json() const {
    return Json{{"id", id},
                {"question", question},
                {"expects_file", expects_file},
                {"answer", answer ? Json(*answer) : Json(nullptr)},
                {"answered", answered}};
}

ElicitationQuestion ElicitationQuestion::from_json(const Json& j) {
    ElicitationQuestion q;
    try {
        q.id = j.at("id").get<std::string>();
        q.question = j.at("question").get<std::string>();
        q.expects_file = j.at("expects_file").get<bool>();
        if (!j.at("answer").is_null()) q.answer = j.at("answer").get<std::string>();
        q.answered = j.at("answered").get<bool>();
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::corrupt_session, std::string("malformed question: ") + e.what());
    }
    if (q.answered && !q.answer) throw Error(ErrorCode::corrupt_session, "answered question without answer");
    return q;
}

Json DraftCandidate::to_json() const {
    return Json{{"node", node},
                {"content", content},
                {"context_keys_used", context_keys_used},
                {"revision", revision},
                {"lineage", to_string(lineage)}};
}

DraftCandidate DraftCandidate::from_json(const Json& j) {
    DraftCandidate d;
    try {
        d.node = j.at("node").get<std::string>();
        d.content = j.at("content").get<std::string>();
        d.context_keys_used = j.at("context_keys_used").get<std::vector<std::string>>();
        d.revision = j.at("revision").get<int>();
        d.lineage = parse_draft_lineage(j.at("lineage").get<std::string>());
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::corrupt_session, std::string("malformed draft: ") + e.what());
    }
    return d;
}

}  // namespace plancurate

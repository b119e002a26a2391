#include "plancurate/prompt_library.hpp"

#include "builtin_prompts.hpp"
#include "plancurate/util.hpp"

#include <fstream>
#include <sstream>

namespace plancurate {

namespace {

constexpr EnumNames<TemplateId, 9> kTemplateNames{{{
    {TemplateId::elicit_global, "elicit_global"},
    {TemplateId::elicit_draft_iteration, "elicit_draft_iteration"},
    {TemplateId::select_context_draft, "select_context_draft"},
    {TemplateId::select_context_fork, "select_context_fork"},
    {TemplateId::generate_subtasks, "generate_subtasks"},
    {TemplateId::detect_subtask, "detect_subtask"},
    {TemplateId::fork_decision, "fork_decision"},
    {TemplateId::generate_draft, "generate_draft"},
    {TemplateId::extract_fork_entities, "extract_fork_entities"},
}}};

constexpr EnumNames<DetectionVariant, 6> kVariantNames{{{
    {DetectionVariant::zero_shot, "zero_shot"},
    {DetectionVariant::few_shot, "few_shot"},
    {DetectionVariant::few_shot_cot, "few_shot_cot"},
    {DetectionVariant::few_shot_cot_tree, "few_shot_cot_tree"},
    {DetectionVariant::few_shot_cot_draft, "few_shot_cot_draft"},
    {DetectionVariant::few_shot_cot_tree_draft, "few_shot_cot_tree_draft"},
}}};

constexpr EnumNames<Polarity, 2> kPolarityNames{{{
    {Polarity::yes_means_decompose, "yes_means_decompose"},
    {Polarity::yes_means_actionable, "yes_means_actionable"},
}}};

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

[[noreturn]] void malformed(const std::string& msg) {
    throw Error(ErrorCode::malformed_template, msg);
}

std::string strip_trailing_newlines(std::string text) {
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
}

std::vector<std::string> parse_name_list(std::string_view raw) {
    std::string body = trim(raw);
    if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
        malformed("placeholders must be written as [a, b, c]");
    }
    std::vector<std::string> names;
    std::stringstream ss(body.substr(1, body.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::string name = trim(item);
        if (!name.empty()) names.push_back(std::move(name));
    }
    return names;
}

}  // namespace

std::string_view to_string(TemplateId id) { return kTemplateNames.name(id); }
std::string_view to_string(DetectionVariant v) { return kVariantNames.name(v); }
std::string_view to_string(Polarity p) { return kPolarityNames.name(p); }

TemplateId parse_template_id(std::string_view text) {
    return kTemplateNames.parse(text, ErrorCode::malformed_template, "template id");
}

DetectionVariant parse_detection_variant(std::string_view text, ErrorCode on_error) {
    return kVariantNames.parse(text, on_error, "detection strategy");
}

const std::vector<DetectionVariant>& all_detection_variants() {
    static const std::vector<DetectionVariant> variants{
        DetectionVariant::zero_shot,          DetectionVariant::few_shot,
        DetectionVariant::few_shot_cot,       DetectionVariant::few_shot_cot_tree,
        DetectionVariant::few_shot_cot_draft, DetectionVariant::few_shot_cot_tree_draft,
    };
    return variants;
}

DetectionStrategy DetectionStrategy::of(DetectionVariant variant) {
    DetectionStrategy s;
    s.variant = variant;
    const std::string_view name = to_string(variant);
    s.includes_level = name.find("tree") != std::string_view::npos;
    s.includes_draft = name.find("draft") != std::string_view::npos;
    s.chain_of_thought = name.find("cot") != std::string_view::npos;
    s.shot_count = variant == DetectionVariant::zero_shot ? 0 : 3;
    s.polarity = s.chain_of_thought ? Polarity::yes_means_actionable : Polarity::yes_means_decompose;
    return s;
}

// ---------------------------------------------------------------------------
// PromptTemplate

std::vector<PromptTemplate::Segment> PromptTemplate::tokenize(std::string_view text) {
    std::vector<Segment> out;
    std::string literal;
    auto flush = [&] {
        if (!literal.empty()) out.push_back({false, std::move(literal)});
        literal.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '{') {
            if (i + 1 < text.size() && text[i + 1] == '{') {
                literal += '{';
                ++i;
                continue;
            }
            std::size_t j = i + 1;
            while (j < text.size() && is_placeholder_char(text[j])) ++j;
            if (j == i + 1 || j >= text.size() || text[j] != '}') {
                malformed("unescaped '{' at offset " + std::to_string(i));
            }
            flush();
            out.push_back({true, std::string(text.substr(i + 1, j - i - 1))});
            i = j;
        } else if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
            literal += '}';
            ++i;
        } else {
            literal += c;
        }
    }
    flush();
    return out;
}

PromptTemplate PromptTemplate::parse(std::string_view file_text) {
    const auto lines = split_lines(file_text);
    std::size_t i = 0;
    if (lines.empty() || trim(lines[0]) != "---") malformed("missing front matter");

    PromptTemplate t;
    std::optional<std::vector<std::string>> declared;
    bool have_id = false;
    for (i = 1; i < lines.size() && trim(lines[i]) != "---"; ++i) {
        const auto colon = lines[i].find(':');
        if (colon == std::string::npos) malformed("bad front matter line: " + lines[i]);
        const std::string field = trim(std::string_view(lines[i]).substr(0, colon));
        const std::string value = trim(std::string_view(lines[i]).substr(colon + 1));
        if (field == "id") {
            t.id_ = parse_template_id(value);
            have_id = true;
        } else if (field == "variant") {
            t.variant_ = parse_detection_variant(value, ErrorCode::malformed_template);
        } else if (field == "placeholders") {
            declared = parse_name_list(value);
        } else {
            malformed("unknown front matter field '" + field + "'");
        }
    }
    if (i >= lines.size()) malformed("unterminated front matter");
    if (!have_id || !declared) malformed("front matter needs id and placeholders");
    if ((t.id_ == TemplateId::detect_subtask) != t.variant_.has_value()) {
        malformed("variant is required for detect_subtask and only for it");
    }

    std::string* section = nullptr;
    bool seen_system = false;
    bool seen_user = false;
    for (++i; i < lines.size(); ++i) {
        if (lines[i] == "@system") {
            section = &t.system_text_;
            seen_system = true;
            continue;
        }
        if (lines[i] == "@user") {
            section = &t.user_text_;
            seen_user = true;
            continue;
        }
        if (section == nullptr) {
            if (is_blank(lines[i])) continue;
            malformed("text outside of @system/@user section");
        }
        *section += lines[i];
        *section += '\n';
    }
    if (!seen_system || !seen_user) malformed("template needs @system and @user sections");
    t.system_text_ = strip_trailing_newlines(std::move(t.system_text_));
    t.user_text_ = strip_trailing_newlines(std::move(t.user_text_));

    t.system_segments_ = tokenize(t.system_text_);
    t.user_segments_ = tokenize(t.user_text_);

    std::set<std::string, std::less<>> found;
    for (const auto* segs : {&t.system_segments_, &t.user_segments_}) {
        for (const auto& s : *segs) {
            if (s.is_placeholder) found.insert(s.text);
        }
    }
    t.placeholders_.insert(declared->begin(), declared->end());
    if (found != t.placeholders_) {
        malformed("declared placeholders do not match the template text of " +
                  std::string(to_string(t.id_)));
    }
    return t;
}

std::string PromptTemplate::substitute(const std::vector<Segment>& segments,
                                       const Bindings& bindings) {
    std::string out;
    for (const auto& s : segments) {
        if (!s.is_placeholder) {
            out += s.text;
            continue;
        }
        auto it = bindings.find(s.text);
        if (it == bindings.end()) {
            throw Error(ErrorCode::unreplaced_placeholder, "placeholder {" + s.text + "} left unreplaced",
                        Json{{"name", s.text}});
        }
        out += it->second;
    }
    return out;
}

RenderedPrompt PromptTemplate::render(const Bindings& bindings) const {
    for (const auto& name : placeholders_) {
        if (!bindings.contains(name)) {
            throw Error(ErrorCode::missing_binding,
                        "missing binding '" + name + "' for " + std::string(to_string(id_)),
                        Json{{"name", name}});
        }
    }
    for (const auto& [name, value] : bindings) {
        if (!placeholders_.contains(name)) {
            throw Error(ErrorCode::unknown_binding,
                        "unknown binding '" + name + "' for " + std::string(to_string(id_)),
                        Json{{"name", name}});
        }
    }
    RenderedPrompt out;
    out.system = substitute(system_segments_, bindings);
    out.user = substitute(user_segments_, bindings);
    return out;
}

// ---------------------------------------------------------------------------
// PromptLibrary

void PromptLibrary::add(PromptTemplate tmpl) {
    if (tmpl.variant()) {
        const auto v = *tmpl.variant();
        detection_.insert_or_assign(v, std::move(tmpl));
    } else {
        const auto id = tmpl.id();
        templates_.insert_or_assign(id, std::move(tmpl));
    }
}

const PromptLibrary& PromptLibrary::builtin() {
    static const PromptLibrary lib = [] {
        PromptLibrary l;
        for (const auto& file : detail::builtin_prompt_files()) {
            l.add(PromptTemplate::parse(file.content));
        }
        return l;
    }();
    return lib;
}

PromptLibrary PromptLibrary::load_directory(const std::filesystem::path& dir) {
    PromptLibrary lib = builtin();
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw Error(ErrorCode::io_error, "prompt directory not found: " + dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        if (!in) throw Error(ErrorCode::io_error, "cannot read " + entry.path().string());
        std::stringstream buf;
        buf << in.rdbuf();
        lib.add(PromptTemplate::parse(buf.str()));
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(TemplateId id) const {
    if (id == TemplateId::detect_subtask) return detection(kProductionVariant);
    auto it = templates_.find(id);
    if (it == templates_.end()) {
        throw Error(ErrorCode::malformed_template, "template not loaded: " + std::string(to_string(id)));
    }
    return it->second;
}

const PromptTemplate& PromptLibrary::detection(DetectionVariant variant) const {
    auto it = detection_.find(variant);
    if (it == detection_.end()) {
        throw Error(ErrorCode::malformed_template,
                    "detection template not loaded: " + std::string(to_string(variant)));
    }
    return it->second;
}

RenderedPrompt PromptLibrary::render(TemplateId id, const Bindings& bindings) const {
    return get(id).render(bindings);
}

RenderedPrompt PromptLibrary::detection_prompt(const DetectionStrategy& strategy,
                                               std::string_view title,
                                               std::string_view description,
                                               std::optional<int> level,
                                               std::optional<std::string_view> draft) const {
    if (level.has_value() != strategy.includes_level || draft.has_value() != strategy.includes_draft) {
        throw Error(ErrorCode::strategy_input_mismatch,
                    "inputs do not match detection strategy " + std::string(to_string(strategy.variant)),
                    Json{{"strategy", to_string(strategy.variant)},
                         {"level_given", level.has_value()},
                         {"draft_given", draft.has_value()}});
    }
    Bindings b{{"task_name", std::string(title)}, {"task_description", std::string(description)}};
    if (level) b.emplace("level", std::to_string(*level));
    if (draft) b.emplace("draft", std::string(*draft));
    RenderedPrompt out = detection(strategy.variant).render(b);
    out.strategy = strategy;
    return out;
}

}  // namespace plancurate

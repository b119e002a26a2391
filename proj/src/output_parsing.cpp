#include "plancurate/output_parsing.hpp"

#include "plancurate/util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

namespace plancurate {

namespace {

/// Strips "12." / "12)" numbering. Returns nullopt if the line is not numbered.
std::optional<std::string> strip_numbering(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == 0 || i >= line.size() || (line[i] != '.' && line[i] != ')')) return std::nullopt;
    return trim(line.substr(i + 1));
}

std::optional<std::string> strip_bullet(std::string_view line) {
    for (std::string_view b : {"- ", "* ", "• "}) {
        if (line.starts_with(b)) return trim(line.substr(b.size()));
    }
    return std::nullopt;
}

std::string remove_all(std::string text, std::string_view needle) {
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos)) {
        text.erase(pos, needle.size());
    }
    return text;
}

std::vector<std::string> split_on(std::string_view text, std::string_view sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(text.substr(start)));
            break;
        }
        out.push_back(trim(text.substr(start, pos - start)));
        start = pos + sep.size();
    }
    return out;
}

std::vector<std::string> split_fields(std::string_view item) {
    static constexpr std::array<std::string_view, 5> kSeparators{
        " — ", " – ", " -- ", " | ", " - "};
    for (auto sep : kSeparators) {
        if (item.find(sep) != std::string_view::npos) return split_on(item, sep);
    }
    if (const auto colon = item.find(": "); colon != std::string_view::npos) {
        return {trim(item.substr(0, colon)), trim(item.substr(colon + 2))};
    }
    return {trim(item)};
}

/// Returns true/false for a line of the form "... answer: yes|no ...".
std::optional<bool> answer_line_value(std::string_view line) {
    std::string lower = to_lower(remove_all(std::string(line), "*"));
    const auto pos = lower.find("answer");
    if (pos == std::string::npos) return std::nullopt;
    std::size_t i = pos + 6;
    while (i < lower.size() && lower[i] == ' ') ++i;
    if (i >= lower.size() || lower[i] != ':') return std::nullopt;
    ++i;
    while (i < lower.size() && (lower[i] == ' ' || lower[i] == '"' || lower[i] == '\'')) ++i;
    auto word_at = [&](std::string_view w) {
        if (lower.compare(i, w.size(), w) != 0) return false;
        const std::size_t end = i + w.size();
        return end >= lower.size() || !std::isalpha(static_cast<unsigned char>(lower[end]));
    };
    if (word_at("yes")) return true;
    if (word_at("no")) return false;
    return std::nullopt;
}

}  // namespace

std::vector<SubtaskSpec> parse_subtask_list(std::string_view text) {
    std::vector<SubtaskSpec> out;
    for (const auto& raw : split_lines(text)) {
        auto item = strip_numbering(trim(raw));
        if (!item) continue;
        auto fields = split_fields(remove_all(*item, "**"));
        SubtaskSpec spec;
        spec.title = fields.front();
        if (spec.title.empty()) continue;
        if (fields.size() >= 2) {
            const std::size_t desc_end = fields.size() >= 3 ? fields.size() - 1 : fields.size();
            for (std::size_t i = 1; i < desc_end; ++i) {
                if (!spec.description.empty()) spec.description += " — ";
                spec.description += fields[i];
            }
            if (fields.size() >= 3) spec.estimated_duration = fields.back();
        }
        if (spec.estimated_duration.empty()) spec.estimated_duration = std::string(kUnspecifiedDuration);
        out.push_back(std::move(spec));
    }
    if (out.empty()) {
        throw Error(ErrorCode::unparseable_subtasks, "no subtask items found in model output",
                    Json{{"excerpt", std::string(text.substr(0, 200))}});
    }
    return out;
}

Verdict parse_yes_no(std::string_view text, Polarity polarity) {
    const auto lines = split_lines(text);
    std::optional<bool> said_yes;
    std::string reasoning;

    for (std::size_t i = lines.size(); i-- > 0;) {
        if (auto v = answer_line_value(lines[i])) {
            said_yes = v;
            std::string before;
            for (std::size_t k = 0; k < i; ++k) {
                before += lines[k];
                before += '\n';
            }
            reasoning = trim(before);
            break;
        }
    }

    if (!said_yes) {
        const std::string t = trim(remove_all(std::string(text), "*"));
        const std::string lower = to_lower(t);
        auto leading = [&](std::string_view w) {
            if (!lower.starts_with(w)) return false;
            return lower.size() == w.size() || !std::isalpha(static_cast<unsigned char>(lower[w.size()]));
        };
        if (leading("yes")) {
            said_yes = true;
            reasoning = trim(std::string_view(t).substr(3));
        } else if (leading("no")) {
            said_yes = false;
            reasoning = trim(std::string_view(t).substr(2));
        }
        while (!reasoning.empty() && (reasoning.front() == ',' || reasoning.front() == '.' ||
                                      reasoning.front() == ':' || reasoning.front() == ' ')) {
            reasoning.erase(0, 1);
        }
    }

    if (!said_yes) {
        throw Error(ErrorCode::unparseable_verdict, "no Yes/No verdict in model output",
                    Json{{"excerpt", std::string(text.substr(0, 200))}});
    }
    const bool needs = polarity == Polarity::yes_means_decompose ? *said_yes : !*said_yes;
    return Verdict{needs, std::move(reasoning)};
}

KeySelectionResult parse_key_selection(std::string_view text, std::span<const std::string> valid_keys) {
    if (valid_keys.empty()) throw Error(ErrorCode::precondition_failed, "no context keys to select from");
    std::vector<std::string> lowered;
    lowered.reserve(valid_keys.size());
    for (const auto& k : valid_keys) lowered.push_back(to_lower(k));

    KeySelectionResult result;
    for (const auto& raw : split_lines(text)) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        if (auto s = strip_numbering(line)) line = *s;
        else if (auto b = strip_bullet(line)) line = *b;
        line = remove_all(remove_all(std::move(line), "**"), "`");
        if (!line.empty() && (line.front() == '"' || line.front() == '<' || line.front() == '\'')) {
            line.erase(0, 1);
        }
        const std::string lower = to_lower(line);

        std::optional<std::size_t> best;
        for (std::size_t k = 0; k < lowered.size(); ++k) {
            const auto& key = lowered[k];
            if (!lower.starts_with(key)) continue;
            std::size_t i = key.size();
            while (i < lower.size() && (lower[i] == '"' || lower[i] == '>' || lower[i] == '\'' || lower[i] == ' ')) ++i;
            if (i < lower.size() && lower[i] != ':') continue;
            if (!best || key.size() > lowered[*best].size()) best = k;
        }
        if (!best) {
            result.dropped_lines.push_back(line);
            continue;
        }
        const std::string& key = valid_keys[*best];
        const auto already = std::any_of(result.selections.begin(), result.selections.end(),
                                         [&](const KeySelection& s) { return s.key == key; });
        if (already) continue;
        const auto colon = line.find(':', lowered[*best].size());
        std::string reason = colon == std::string::npos ? std::string() : trim(std::string_view(line).substr(colon + 1));
        result.selections.push_back({key, std::move(reason)});
    }
    if (result.selections.empty()) {
        throw Error(ErrorCode::no_valid_keys, "model selected no valid context key",
                    Json{{"dropped", result.dropped_lines}});
    }
    return result;
}

std::vector<ParsedQuestion> parse_question_list(std::string_view text) {
    auto to_question = [](std::string body) {
        ParsedQuestion q;
        body = remove_all(std::move(body), "**");
        const std::string lower = to_lower(body);
        for (std::string_view tag : {"[file]", "[document]", "[upload]"}) {
            if (lower.starts_with(tag)) {
                q.expects_file = true;
                body = trim(std::string_view(body).substr(tag.size()));
                break;
            }
        }
        if (!q.expects_file && lower.starts_with("[text]")) body = trim(std::string_view(body).substr(6));
        q.question = std::move(body);
        return q;
    };

    std::vector<ParsedQuestion> out;
    std::vector<std::string> bare;
    for (const auto& raw : split_lines(text)) {
        const std::string line = trim(raw);
        std::optional<std::string> item = strip_numbering(line);
        if (!item) item = strip_bullet(line);
        if (item) {
            auto q = to_question(*item);
            if (!q.question.empty()) out.push_back(std::move(q));
        } else if (!line.empty() && line.back() == '?') {
            bare.push_back(line);
        }
    }
    if (out.empty()) {
        for (auto& line : bare) out.push_back(to_question(std::move(line)));
    }
    return out;
}

}  // namespace plancurate

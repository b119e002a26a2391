#pragma once

#include "plancurate/prompt_library.hpp"
#include "plancurate/task_graph.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace plancurate {

inline constexpr std::string_view kUnspecifiedDuration = "unspecified";

/// Numbered "Title — Description — Duration" items; surrounding prose is
/// ignored. Missing durations become "unspecified". Throws
/// unparseable_subtasks when no item is found.
std::vector<SubtaskSpec> parse_subtask_list(std::string_view text);

struct Verdict {
    bool needs_decomposition = false;
    std::string reasoning;

    friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Looks for a final "Answer: Yes|No" line, then for a leading Yes/No token.
/// Throws unparseable_verdict if neither is present.
Verdict parse_yes_no(std::string_view text, Polarity polarity);

struct KeySelection {
    std::string key;  ///< canonical spelling from valid_keys
    std::string reason;

    friend bool operator==(const KeySelection&, const KeySelection&) = default;
};

struct KeySelectionResult {
    std::vector<KeySelection> selections;
    std::vector<std::string> dropped_lines;
};

/// "key: reason" lines matched case-insensitively against `valid_keys`.
/// Duplicates keep the first reason. Throws no_valid_keys when nothing
/// matches.
KeySelectionResult parse_key_selection(std::string_view text, std::span<const std::string> valid_keys);

struct ParsedQuestion {
    std::string question;
    bool expects_file = false;

    friend bool operator==(const ParsedQuestion&, const ParsedQuestion&) = default;
};

/// Numbered or bulleted questions, optionally tagged [FILE] or [TEXT].
std::vector<ParsedQuestion> parse_question_list(std::string_view text);

}  // namespace plancurate

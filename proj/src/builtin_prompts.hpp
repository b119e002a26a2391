#pragma once

#include <span>
#include <string_view>

namespace plancurate::detail {

struct PromptFile {
    std::string_view name;
    std::string_view content;
};

// Generated at configure time from prompts/*.txt.
std::span<const PromptFile> builtin_prompt_files();

}  // namespace plancurate::detail

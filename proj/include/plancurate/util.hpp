#pragma once

#include "plancurate/errors.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace plancurate {

/// Bidirectional enum <-> wire-name table. Parsing an unknown name throws
/// rather than silently mapping to a default.
template <typename E, std::size_t N>
struct EnumNames {
    std::array<std::pair<E, std::string_view>, N> entries;

    [[nodiscard]] constexpr std::string_view name(E value) const {
        for (const auto& [e, n] : entries) {
            if (e == value) return n;
        }
        return "?";
    }

    [[nodiscard]] E parse(std::string_view text, ErrorCode on_error,
                          std::string_view what) const {
        for (const auto& [e, n] : entries) {
            if (n == text) return e;
        }
        throw Error(on_error, "unknown " + std::string(what) + " '" + std::string(text) + "'",
                    Json{{"field", what}, {"value", text}});
    }

    [[nodiscard]] bool contains(std::string_view text) const {
        return std::any_of(entries.begin(), entries.end(),
                           [&](const auto& p) { return p.second == text; });
    }
};

std::string trim(std::string_view text);
bool is_blank(std::string_view text);
std::string to_lower(std::string_view text);

/// Truncates to at most `max_chars` code points without splitting a
/// UTF-8 sequence.
std::string utf8_truncate(std::string_view text, std::size_t max_chars);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string> split_lines(std::string_view text);

/// Source of timestamps. Test mode returns a fixed epoch so that session
/// files are byte-stable across runs.
class Clock {
public:
    explicit Clock(bool frozen = false) : frozen_(frozen) {}

    [[nodiscard]] std::string now_iso8601() const;
    [[nodiscard]] bool frozen() const noexcept { return frozen_; }

    static constexpr std::string_view kFrozenTimestamp = "1970-01-01T00:00:00Z";

private:
    bool frozen_;
};

}  // namespace plancurate

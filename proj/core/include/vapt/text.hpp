#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace vapt::text {

std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Lowercase + trim; topic labels are compared in this form.
std::string normalize_label(std::string_view s);

// Script-range heuristic. Returns a BCP-47 style tag ("ko", "ja", "zh",
// "ru", "und-Latn", ...) or nullopt when the text has no letters.
std::optional<std::string> detect_language_tag(std::string_view s);

}  // namespace vapt::text

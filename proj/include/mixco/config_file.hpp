#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mixco {

/// Ordered key=value entries. Later entries for the same key win.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses "key = value" lines; blank lines and lines starting with '#' are
/// skipped. Throws ConfigError("line N: ...") on malformed lines.
[[nodiscard]] KeyValues parse_key_values(std::string_view text);
[[nodiscard]] KeyValues load_key_values(const std::filesystem::path& path);
[[nodiscard]] std::string render_key_values(const KeyValues& kv);

/// "key=value" from a command-line override.
[[nodiscard]] std::pair<std::string, std::string> parse_override(const std::string& text);

}  // namespace mixco

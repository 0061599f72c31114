#include "mixco/config_file.hpp"

#include "binary_io.hpp"
#include "mixco/errors.hpp"

namespace mixco {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        ++line_no;
        const std::string line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
        }
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        }
        kv.emplace_back(std::move(key), std::move(value));
    }
    return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) { return parse_key_values(io::read_file(path)); }

std::string render_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k + "=" + v + "\n";
    }
    return out;
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
    const auto kv = parse_key_values(text);
    if (kv.size() != 1) {
        throw ConfigError("override '" + text + "' is not of the form key=value");
    }
    return kv.front();
}

}  // namespace mixco

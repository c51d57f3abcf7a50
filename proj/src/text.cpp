#include "kgrag/text.hpp"

#include <cctype>
#include <iostream>

namespace kgrag::text {

bool is_word_byte(unsigned char c) {
    if (c >= 0x80) return true;
    return std::isalnum(c) != 0;
}

std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : s) {
        if (is_word_byte(c)) {
            cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::string normalize_name(std::string_view s) {
    return to_lower(collapse_whitespace(s));
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true;  // leading whitespace is dropped
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_space = true;
        } else {
            if (in_space && !out.empty()) out.push_back(' ');
            in_space = false;
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::size_t approx_token_count(std::string_view s) {
    return (s.size() + 3) / 4;
}

void warn(const std::string& message) {
    std::cerr << "[kgrag] warning: " << message << "\n";
}

}  // namespace kgrag::text

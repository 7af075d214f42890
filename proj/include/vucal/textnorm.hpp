#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace vucal {

inline std::string to_lower_ascii(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

inline std::string trim(std::string_view text) {
    size_t begin = 0;
    size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

// Canonical answer form: lowercase, punctuation removed, leading articles
// dropped, whitespace collapsed to single spaces.
inline std::string normalize_answer(std::string_view text) {
    std::string lowered;
    lowered.reserve(text.size());
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            lowered.push_back(static_cast<char>(std::tolower(c)));
        } else if (std::isspace(c)) {
            lowered.push_back(' ');
        }
        // punctuation and other bytes are dropped
    }

    std::vector<std::string> words;
    std::string word;
    for (char c : lowered) {
        if (c == ' ') {
            if (!word.empty()) {
                words.push_back(word);
                word.clear();
            }
        } else {
            word.push_back(c);
        }
    }
    if (!word.empty()) words.push_back(word);

    size_t start = 0;
    while (start < words.size() &&
           (words[start] == "a" || words[start] == "an" || words[start] == "the")) {
        ++start;
    }

    std::string out;
    for (size_t i = start; i < words.size(); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += words[i];
    }
    return out;
}

inline bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

// Bidirectional containment on normalized forms. Empty strings only match
// each other, otherwise every answer would swallow the empty one.
inline bool normalized_containment_match(std::string_view a, std::string_view b) {
    const std::string na = normalize_answer(a);
    const std::string nb = normalize_answer(b);
    if (na.empty() || nb.empty()) return na == nb;
    return contains(na, nb) || contains(nb, na);
}

}  // namespace vucal
